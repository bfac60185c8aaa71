/**
 * Plain binary64 matrix multiplication with a strictly sequential,
 * k-ascending reduction. For 1xK times Kx1 shapes this performs the exact
 * same IEEE-754 operation sequence as any other sequential binary64
 * implementation, so results agree bit-for-bit with the harness oracle.
 */
export function sequentialMatmul(a: number[][], b: number[][]): number[][] {
  const rows = a.length;
  const inner = b.length;
  const cols = b[0].length;
  if (a[0].length !== inner) {
    throw new Error(`dimension mismatch: ${rows}x${a[0].length} @ ${inner}x${cols}`);
  }
  const out: number[][] = [];
  for (let i = 0; i < rows; i++) {
    const row: number[] = new Array(cols);
    for (let j = 0; j < cols; j++) {
      let acc = 0;
      for (let k = 0; k < inner; k++) {
        acc += a[i][k] * b[k][j];
      }
      row[j] = acc;
    }
    out.push(row);
  }
  return out;
}
