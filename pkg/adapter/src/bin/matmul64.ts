#!/usr/bin/env node
// Ready-to-use server: exposes a sequential binary64 matmul to the harness.
import { sequentialMatmul } from "../matmul";
import { serve } from "../server";

serve(sequentialMatmul, "node-matmul64");
