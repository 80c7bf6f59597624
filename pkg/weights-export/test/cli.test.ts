import { mkdtempSync, readFileSync, writeFileSync } from 'fs';
import { tmpdir } from 'os';
import { join } from 'path';
import { describe, expect, it, vi } from 'vitest';

import { main } from '../src/cli.js';
import { parseDiaw } from '../src/diaw.js';

function workdir(): string {
  return mkdtempSync(join(tmpdir(), 'wexport-'));
}

function quiet<T>(fn: () => T): T {
  const log = vi.spyOn(console, 'log').mockImplementation(() => {});
  const err = vi.spyOn(console, 'error').mockImplementation(() => {});
  try {
    return fn();
  } finally {
    log.mockRestore();
    err.mockRestore();
  }
}

describe('cli', () => {
  it('writes a toy bundle and exits 0', () => {
    const dir = workdir();
    const weights = join(dir, 'net.diaw');
    const manifest = join(dir, 'net.manifest');
    const code = quiet(() =>
      main(['toy', '--levels', '2', '--channels', '4', '--seed', '3',
            '--out-weights', weights, '--out-manifest', manifest])
    );
    expect(code).toBe(0);
    expect(parseDiaw(readFileSync(weights)).length).toBe(4);
    expect(readFileSync(manifest, 'utf-8')).toContain('tag lvl2');
  });

  it('reproduces the same bytes for the same seed', () => {
    const dir = workdir();
    const args = (n: string) => [
      'toy', '--levels', '3', '--channels', '6', '--seed', '9',
      '--out-weights', join(dir, `${n}.diaw`), '--out-manifest', join(dir, `${n}.manifest`),
    ];
    expect(quiet(() => main(args('a')))).toBe(0);
    expect(quiet(() => main(args('b')))).toBe(0);
    expect(readFileSync(join(dir, 'a.diaw')).equals(readFileSync(join(dir, 'b.diaw')))).toBe(true);
    expect(readFileSync(join(dir, 'a.manifest'), 'utf-8'))
      .toBe(readFileSync(join(dir, 'b.manifest'), 'utf-8'));
  });

  it('exits 1 on usage errors', () => {
    expect(quiet(() => main([]))).toBe(1);
    expect(quiet(() => main(['resnet']))).toBe(1);
    expect(quiet(() => main(['toy', '--levels', '2']))).toBe(1);
    expect(quiet(() => main(['toy', '--bogus', '1']))).toBe(1);
  });

  it('exits 2 when the archive is missing', () => {
    const dir = workdir();
    const code = quiet(() =>
      main(['vgg19', '--input', join(dir, 'nope.safetensors'),
            '--out-weights', join(dir, 'w'), '--out-manifest', join(dir, 'm')])
    );
    expect(code).toBe(2);
  });

  it('exits 3 on a malformed archive', () => {
    const dir = workdir();
    const archive = join(dir, 'bad.safetensors');
    writeFileSync(archive, Buffer.from('not a checkpoint'));
    const code = quiet(() =>
      main(['vgg19', '--input', archive,
            '--out-weights', join(dir, 'w'), '--out-manifest', join(dir, 'm')])
    );
    expect(code).toBe(3);
  });

  it('exits 3 on out-of-range toy parameters', () => {
    const dir = workdir();
    const code = quiet(() =>
      main(['toy', '--levels', '1', '--channels', '4', '--seed', '0',
            '--out-weights', join(dir, 'w'), '--out-manifest', join(dir, 'm')])
    );
    expect(code).toBe(3);
  });
});
