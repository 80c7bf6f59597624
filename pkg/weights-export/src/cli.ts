#!/usr/bin/env node
/**
 * Weight export CLI.
 *
 * Usage:
 *   node dist/cli.js toy --levels 3 --channels 8 --seed 0 --out-weights net.diaw --out-manifest net.manifest
 *   node dist/cli.js vgg19 --input vgg19.safetensors --out-weights vgg.diaw --out-manifest vgg.manifest
 *
 * Exit codes: 0 success, 1 usage error, 2 missing input file,
 * 3 malformed archive or invalid parameters.
 */

import { existsSync, writeFileSync } from 'fs';
import { writeDiaw } from './diaw.js';
import { buildToyNetwork } from './toy.js';
import { ArchiveError, convertVgg19, parseSafetensors } from './vgg19.js';

interface CliOptions {
  command: string;
  levels: number;
  channels: number;
  seed: number;
  input: string;
  outWeights: string;
  outManifest: string;
}

const USAGE = `usage:
  cli.js toy --levels <n> --channels <n> --seed <n> --out-weights <path> --out-manifest <path>
  cli.js vgg19 --input <model.safetensors> --out-weights <path> --out-manifest <path>`;

function parseArgs(argv: string[]): CliOptions {
  const opts: CliOptions = {
    command: argv[0] || '',
    levels: 3,
    channels: 8,
    seed: 0,
    input: '',
    outWeights: '',
    outManifest: '',
  };
  for (let i = 1; i < argv.length; i++) {
    switch (argv[i]) {
      case '--levels':
        opts.levels = parseInt(argv[++i], 10);
        break;
      case '--channels':
        opts.channels = parseInt(argv[++i], 10);
        break;
      case '--seed':
        opts.seed = parseInt(argv[++i], 10);
        break;
      case '--input':
        opts.input = argv[++i] || '';
        break;
      case '--out-weights':
        opts.outWeights = argv[++i] || '';
        break;
      case '--out-manifest':
        opts.outManifest = argv[++i] || '';
        break;
      default:
        throw new Error(`unknown argument '${argv[i]}'`);
    }
  }
  return opts;
}

export function main(argv: string[]): number {
  let opts: CliOptions;
  try {
    opts = parseArgs(argv);
  } catch (error) {
    console.error(`error: ${(error as Error).message}`);
    console.error(USAGE);
    return 1;
  }

  if (!opts.outWeights || !opts.outManifest) {
    console.error('error: --out-weights and --out-manifest are required');
    console.error(USAGE);
    return 1;
  }

  let files: { manifest: string; tensors: Parameters<typeof writeDiaw>[0] };
  if (opts.command === 'toy') {
    try {
      files = buildToyNetwork({ levels: opts.levels, channels: opts.channels, seed: opts.seed });
    } catch (error) {
      console.error(`error: ${(error as Error).message}`);
      return 3;
    }
  } else if (opts.command === 'vgg19') {
    if (!opts.input) {
      console.error('error: vgg19 needs --input');
      console.error(USAGE);
      return 1;
    }
    if (!existsSync(opts.input)) {
      console.error(`error: no such file: ${opts.input}`);
      return 2;
    }
    try {
      files = convertVgg19(parseSafetensors(opts.input));
    } catch (error) {
      if (error instanceof ArchiveError) {
        console.error(`error: ${error.message}`);
        return 3;
      }
      throw error;
    }
  } else {
    console.error(`error: unknown command '${opts.command}'`);
    console.error(USAGE);
    return 1;
  }

  writeFileSync(opts.outWeights, writeDiaw(files.tensors));
  writeFileSync(opts.outManifest, files.manifest);
  console.log(`wrote ${opts.outWeights} (${files.tensors.length} tensors) and ${opts.outManifest}`);
  return 0;
}

const invokedDirectly = process.argv[1] && process.argv[1].endsWith('cli.js');
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
