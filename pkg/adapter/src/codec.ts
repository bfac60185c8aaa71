/**
 * Binary64 matrix payload codec for the stdio evaluation protocol.
 *
 * Each element travels as its 16-hex-digit raw IEEE-754 bit pattern
 * (big-endian), row-major, space-separated. Bit patterns round-trip every
 * non-NaN value exactly — including signed zeros, subnormals and
 * infinities — with no dependence on decimal float printing.
 */

const scratch = new DataView(new ArrayBuffer(8));

const HEX16 = /^[0-9a-fA-F]{16}$/;

export function floatToHex(value: number): string {
  if (Number.isNaN(value)) {
    throw new Error("NaN is forbidden in matrix payloads");
  }
  scratch.setFloat64(0, value, false);
  return scratch.getBigUint64(0, false).toString(16).padStart(16, "0");
}

export function hexToFloat(token: string): number {
  if (!HEX16.test(token)) {
    throw new Error(`malformed hex element ${JSON.stringify(token)}: expected 16 hex digits`);
  }
  scratch.setBigUint64(0, BigInt("0x" + token), false);
  const value = scratch.getFloat64(0, false);
  if (Number.isNaN(value)) {
    throw new Error("NaN is forbidden in matrix payloads");
  }
  return value;
}

export function encodeMatrix(matrix: number[][]): string {
  const tokens: string[] = [];
  for (const row of matrix) {
    for (const value of row) {
      tokens.push(floatToHex(value));
    }
  }
  return tokens.join(" ");
}

export function decodeMatrix(payload: string, rows: number, cols: number): number[][] {
  const tokens = payload.split(/\s+/).filter((t) => t.length > 0);
  if (tokens.length !== rows * cols) {
    throw new Error(`expected ${rows * cols} elements, got ${tokens.length}`);
  }
  const out: number[][] = [];
  for (let r = 0; r < rows; r++) {
    const row: number[] = new Array(cols);
    for (let c = 0; c < cols; c++) {
      row[c] = hexToFloat(tokens[r * cols + c]);
    }
    out.push(row);
  }
  return out;
}
