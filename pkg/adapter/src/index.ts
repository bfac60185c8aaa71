export { decodeMatrix, encodeMatrix, floatToHex, hexToFloat } from "./codec";
export { sequentialMatmul } from "./matmul";
export { PROTOCOL_VERSION, serve } from "./server";
export type { KernelCallback } from "./server";
