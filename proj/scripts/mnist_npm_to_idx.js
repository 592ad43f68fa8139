#!/usr/bin/env node
// Builds IDX-format digit files from the npm "mnist" package (10,000 real
// MNIST samples stored as JSON, pixel values rounded to round(p/255, 3)).
//
//   npm install mnist
//   node scripts/mnist_npm_to_idx.js node_modules/mnist/src/digits data/mnist
//
// Output: digits-images-idx3-ubyte / digits-labels-idx1-ubyte, one pooled
// file pair; train/test subsetting is done by the trainer config.

const fs = require('fs');
const path = require('path');

if (process.argv.length !== 4) {
  console.error('usage: mnist_npm_to_idx.js <digits-json-dir> <out-dir>');
  process.exit(1);
}
const [srcDir, outDir] = process.argv.slice(2);
fs.mkdirSync(outDir, { recursive: true });

const images = [];
const labels = [];
for (let digit = 0; digit < 10; digit++) {
  const flat = JSON.parse(
    fs.readFileSync(path.join(srcDir, `${digit}.json`), 'utf8')
  ).data;
  if (flat.length % 784 !== 0) throw new Error(`digit ${digit}: bad length`);
  for (let i = 0; i < flat.length; i += 784) {
    const px = Buffer.alloc(784);
    for (let j = 0; j < 784; j++) {
      const p = Math.round(flat[i + j] * 255); // exact inverse of the rounding
      if (p < 0 || p > 255) throw new Error('pixel out of range');
      px[j] = p;
    }
    images.push(px);
    labels.push(digit);
  }
}

// deterministic interleave so contiguous prefixes are class-balanced
const order = [];
const perClass = new Map();
labels.forEach((lab, idx) => {
  if (!perClass.has(lab)) perClass.set(lab, []);
  perClass.get(lab).push(idx);
});
for (let i = 0; order.length < labels.length; i++)
  for (let d = 0; d < 10; d++) {
    const lst = perClass.get(d);
    if (i < lst.length) order.push(lst[i]);
  }

const n = order.length;
const imgHeader = Buffer.alloc(16);
imgHeader.writeUInt32BE(0x00000803, 0);
imgHeader.writeUInt32BE(n, 4);
imgHeader.writeUInt32BE(28, 8);
imgHeader.writeUInt32BE(28, 12);
const labHeader = Buffer.alloc(8);
labHeader.writeUInt32BE(0x00000801, 0);
labHeader.writeUInt32BE(n, 4);

fs.writeFileSync(
  path.join(outDir, 'digits-images-idx3-ubyte'),
  Buffer.concat([imgHeader, ...order.map((i) => images[i])])
);
fs.writeFileSync(
  path.join(outDir, 'digits-labels-idx1-ubyte'),
  Buffer.concat([labHeader, Buffer.from(order.map((i) => labels[i]))])
);
console.log(`wrote ${n} samples to ${outDir}`);
