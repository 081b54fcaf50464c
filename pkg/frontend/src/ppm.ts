/** Decoder for binary PPM (P6) frames as served by the study backend. */

export interface DecodedFrame {
  width: number;
  height: number;
  /** RGBA bytes ready for ImageData. */
  rgba: Uint8ClampedArray<ArrayBuffer>;
}

export function decodePpm(data: Uint8Array): DecodedFrame {
  if (data[0] !== 0x50 || data[1] !== 0x36) {
    throw new Error("not a P6 PPM");
  }
  let pos = 2;
  const fields: number[] = [];
  while (fields.length < 3) {
    while (pos < data.length && isSpace(data[pos])) pos++;
    if (data[pos] === 0x23) {
      while (pos < data.length && data[pos] !== 0x0a) pos++;
      continue;
    }
    let value = 0;
    const start = pos;
    while (pos < data.length && !isSpace(data[pos])) {
      value = value * 10 + (data[pos] - 0x30);
      pos++;
    }
    if (pos === start) throw new Error("truncated PPM header");
    fields.push(value);
  }
  pos++; // single whitespace byte after maxval
  const [width, height, maxval] = fields;
  if (maxval !== 255) throw new Error(`unsupported maxval ${maxval}`);
  const expected = width * height * 3;
  if (data.length - pos < expected) throw new Error("truncated PPM raster");

  const rgba = new Uint8ClampedArray(width * height * 4);
  for (let i = 0, j = 0; i < expected; i += 3, j += 4) {
    rgba[j] = data[pos + i];
    rgba[j + 1] = data[pos + i + 1];
    rgba[j + 2] = data[pos + i + 2];
    rgba[j + 3] = 255;
  }
  return { width, height, rgba };
}

function isSpace(b: number): boolean {
  return b === 0x20 || b === 0x09 || b === 0x0a || b === 0x0d;
}
