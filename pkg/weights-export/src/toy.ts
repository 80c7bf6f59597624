/**
 * Toy network synthesis: a small conv+relu tower with one tagged pyramid
 * level per stage and 2x2 max-pooling in between.
 *
 * Weights are He-scaled Gaussians (std = sqrt(2 / fanIn)) from a seeded
 * generator so activations keep a stable scale level to level and the
 * same seed always reproduces the same bytes.
 */

import { TensorEntry } from './diaw.js';

export interface ToySpec {
  levels: number;
  channels: number;
  seed: number;
}

export interface NetworkFiles {
  manifest: string;
  tensors: TensorEntry[];
}

/** Deterministic 32-bit PRNG (mulberry32), uniform in [0, 1). */
export function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let z = state;
    z = Math.imul(z ^ (z >>> 15), z | 1);
    z ^= z + Math.imul(z ^ (z >>> 7), z | 61);
    return ((z ^ (z >>> 14)) >>> 0) / 4294967296;
  };
}

/** Standard normal samples via Box-Muller on the uniform stream. */
export function gaussian(uniform: () => number): () => number {
  let spare: number | null = null;
  return () => {
    if (spare !== null) {
      const value = spare;
      spare = null;
      return value;
    }
    let u = 0;
    while (u === 0) {
      u = uniform();
    }
    const v = uniform();
    const radius = Math.sqrt(-2.0 * Math.log(u));
    spare = radius * Math.sin(2.0 * Math.PI * v);
    return radius * Math.cos(2.0 * Math.PI * v);
  };
}

export function buildToyNetwork(spec: ToySpec): NetworkFiles {
  if (!Number.isInteger(spec.levels) || spec.levels < 2) {
    throw new Error(`toy network needs at least 2 levels, got ${spec.levels}`);
  }
  if (!Number.isInteger(spec.channels) || spec.channels < 1 || spec.channels > 16) {
    throw new Error(`toy channels must be in 1..16, got ${spec.channels}`);
  }

  const lines = ['mean 0 0 0'];
  const tensors: TensorEntry[] = [];
  const next = gaussian(mulberry32(spec.seed));

  let inC = 3;
  for (let level = 1; level <= spec.levels; level++) {
    const name = `conv${level}`;
    lines.push(`conv ${name} ${spec.channels} ${inC} 3 3 1 1`);
    lines.push('relu');
    lines.push(`tag lvl${level}`);
    if (level < spec.levels) {
      lines.push('maxpool 2 2');
    }

    const fanIn = inC * 9;
    const std = Math.sqrt(2.0 / fanIn);
    const weight = new Float32Array(spec.channels * inC * 9);
    for (let i = 0; i < weight.length; i++) {
      weight[i] = Math.fround(next() * std);
    }
    tensors.push({ name: `${name}.weight`, dims: [spec.channels, inC, 3, 3], data: weight });
    tensors.push({ name: `${name}.bias`, dims: [spec.channels], data: new Float32Array(spec.channels) });
    inC = spec.channels;
  }

  return { manifest: lines.join('\n') + '\n', tensors };
}
