/**
 * Server side of the stdio evaluation protocol (version 1).
 *
 * One JSON object per line. The server announces itself with a hello
 * message, then answers eval_request messages one at a time. A callback
 * exception becomes an error message and the loop keeps going; shutdown
 * (or end of input) ends the process.
 *
 * The adapter performs no quantization or precision policy of its own:
 * whatever the callback computes is what travels back, bit-for-bit.
 */
import * as readline from "node:readline";

import { decodeMatrix, encodeMatrix } from "./codec";

export const PROTOCOL_VERSION = "1";

export type KernelCallback = (a: number[][], b: number[][]) => number[][];

interface EvalRequest {
  kind: "eval_request";
  trial_id: number;
  rows_a: number;
  cols_a: number;
  rows_b: number;
  cols_b: number;
  data_a: string;
  data_b: string;
}

function write(msg: object): void {
  process.stdout.write(JSON.stringify(msg) + "\n");
}

function handleRequest(msg: EvalRequest, callback: KernelCallback): void {
  const a = decodeMatrix(msg.data_a, msg.rows_a, msg.cols_a);
  const b = decodeMatrix(msg.data_b, msg.rows_b, msg.cols_b);
  const out = callback(a, b);
  if (out.length !== msg.rows_a || out.some((row) => row.length !== msg.cols_b)) {
    throw new Error(
      `callback returned ${out.length}x${out[0]?.length ?? 0}, ` +
      `expected ${msg.rows_a}x${msg.cols_b}`);
  }
  write({
    kind: "eval_response",
    trial_id: msg.trial_id,
    rows: msg.rows_a,
    cols: msg.cols_b,
    data: encodeMatrix(out),
  });
}

/** Run the request/response loop until shutdown; never returns earlier. */
export function serve(callback: KernelCallback, label: string): void {
  write({ kind: "hello", protocol_version: PROTOCOL_VERSION, impl_label: label });
  const rl = readline.createInterface({ input: process.stdin, terminal: false });
  rl.on("line", (line) => {
    if (!line.trim()) {
      return;
    }
    let msg: any;
    try {
      msg = JSON.parse(line);
    } catch (err) {
      write({ kind: "error", trial_id: null, message: `malformed message line: ${err}` });
      return;
    }
    if (msg.kind === "shutdown") {
      process.exit(0);
    }
    if (msg.kind !== "eval_request") {
      write({ kind: "error", trial_id: null, message: `unexpected message kind ${msg.kind}` });
      return;
    }
    try {
      handleRequest(msg as EvalRequest, callback);
    } catch (err) {
      const message = err instanceof Error ? err.message : String(err);
      write({ kind: "error", trial_id: msg.trial_id ?? null, message });
    }
  });
  rl.on("close", () => {
    process.exit(0);
  });
}
