/**
 * VGG-19 conversion: torchvision-style safetensors checkpoint -> DIAW
 * bundle + manifest.
 *
 * The manifest lists all 16 conv layers of the feature extractor with
 * the first relu of each block tagged (relu1_1 .. relu5_1) and the four
 * inter-block 2x2 max-pools; the trailing pool after block 5 is dropped
 * because nothing downstream of the last tag is ever consumed, and
 * omitting it keeps the input-divisibility requirement at 16 instead
 * of 32.  Channel means are the standard RGB training means.
 */

import { readFileSync } from 'fs';
import { TensorEntry } from './diaw.js';

export class ArchiveError extends Error {}

interface SafeTensorInfo {
  dtype: string;
  shape: number[];
  data_offsets: [number, number];
}

export interface SafeTensors {
  tensors: Map<string, { shape: number[]; data: Float32Array }>;
}

/** torchvision vgg19 `features` indices of the conv modules, in order. */
export const VGG19_FEATURE_INDICES = [0, 2, 5, 7, 10, 12, 14, 16, 19, 21, 23, 25, 28, 30, 32, 34];

export const VGG19_CONV_NAMES = [
  'conv1_1', 'conv1_2',
  'conv2_1', 'conv2_2',
  'conv3_1', 'conv3_2', 'conv3_3', 'conv3_4',
  'conv4_1', 'conv4_2', 'conv4_3', 'conv4_4',
  'conv5_1', 'conv5_2', 'conv5_3', 'conv5_4',
];

/** convs after which a 2x2 max-pool follows (end of blocks 1-4). */
const POOL_AFTER = new Set(['conv1_2', 'conv2_2', 'conv3_4', 'conv4_4']);

/** first conv of each block carries the pyramid tag on its relu. */
const TAG_FOR: Record<string, string> = {
  conv1_1: 'relu1_1',
  conv2_1: 'relu2_1',
  conv3_1: 'relu3_1',
  conv4_1: 'relu4_1',
  conv5_1: 'relu5_1',
};

export const VGG19_MEAN = '123.68 116.779 103.939';

export function parseSafetensors(path: string): SafeTensors {
  let raw: Buffer;
  try {
    raw = readFileSync(path);
  } catch (error) {
    throw new ArchiveError(`cannot read '${path}': ${(error as Error).message}`);
  }
  if (raw.length < 8) {
    throw new ArchiveError(`'${path}' is too short to be a safetensors archive`);
  }
  const headerLen = Number(raw.readBigUInt64LE(0));
  if (headerLen <= 0 || 8 + headerLen > raw.length) {
    throw new ArchiveError(`'${path}': header length ${headerLen} exceeds file size`);
  }

  let header: Record<string, SafeTensorInfo>;
  try {
    header = JSON.parse(raw.toString('utf-8', 8, 8 + headerLen));
  } catch (error) {
    throw new ArchiveError(`'${path}': header is not valid JSON`);
  }

  const dataStart = 8 + headerLen;
  const dataLen = raw.length - dataStart;
  const tensors = new Map<string, { shape: number[]; data: Float32Array }>();
  for (const [name, info] of Object.entries(header)) {
    if (name === '__metadata__') {
      continue;
    }
    if (info.dtype !== 'F32') {
      throw new ArchiveError(`tensor '${name}': dtype ${info.dtype} unsupported, need F32`);
    }
    const [start, end] = info.data_offsets;
    const expected = 4 * info.shape.reduce((acc, d) => acc * d, 1);
    if (end - start !== expected || end > dataLen || start < 0) {
      throw new ArchiveError(`tensor '${name}': offsets [${start}, ${end}] inconsistent with shape [${info.shape}]`);
    }
    const bytes = raw.subarray(dataStart + start, dataStart + end);
    const data = new Float32Array(expected / 4);
    for (let i = 0; i < data.length; i++) {
      data[i] = bytes.readFloatLE(4 * i);
    }
    tensors.set(name, { shape: info.shape, data });
  }
  return { tensors };
}

export interface ConvertedNetwork {
  manifest: string;
  tensors: TensorEntry[];
}

/**
 * Pull the 16 feature convs out of the archive and emit manifest +
 * weight tensors.  Channel counts are taken from the archive itself and
 * checked for chain consistency, so scaled-down checkpoints with the
 * same layer naming convert too.
 */
export function convertVgg19(archive: SafeTensors): ConvertedNetwork {
  const lines = [`mean ${VGG19_MEAN}`];
  const out: TensorEntry[] = [];
  let prevOut = 3;

  for (let i = 0; i < VGG19_CONV_NAMES.length; i++) {
    const name = VGG19_CONV_NAMES[i];
    const idx = VGG19_FEATURE_INDICES[i];
    const weight = archive.tensors.get(`features.${idx}.weight`);
    const bias = archive.tensors.get(`features.${idx}.bias`);
    if (!weight || !bias) {
      throw new ArchiveError(`missing tensor 'features.${idx}.weight' or '.bias' for ${name}`);
    }
    if (weight.shape.length !== 4 || weight.shape[2] !== 3 || weight.shape[3] !== 3) {
      throw new ArchiveError(`${name}: weight shape [${weight.shape}] is not a 3x3 conv`);
    }
    const [outC, inC] = weight.shape;
    if (inC !== prevOut) {
      throw new ArchiveError(`${name}: input channels ${inC} do not chain from previous ${prevOut}`);
    }
    if (bias.shape.length !== 1 || bias.shape[0] !== outC) {
      throw new ArchiveError(`${name}: bias shape [${bias.shape}] does not match ${outC} output channels`);
    }

    lines.push(`conv ${name} ${outC} ${inC} 3 3 1 1`);
    lines.push('relu');
    if (TAG_FOR[name]) {
      lines.push(`tag ${TAG_FOR[name]}`);
    }
    if (POOL_AFTER.has(name)) {
      lines.push('maxpool 2 2');
    }

    out.push({ name: `${name}.weight`, dims: weight.shape, data: weight.data });
    out.push({ name: `${name}.bias`, dims: bias.shape, data: bias.data });
    prevOut = outC;
  }

  return { manifest: lines.join('\n') + '\n', tensors: out };
}
