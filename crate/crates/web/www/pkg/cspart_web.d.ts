/* tslint:disable */
/* eslint-disable */

/**
 * Centralized partitioning; `links` are the node pairs realizing each
 * spanning-tree edge.
 */
export function run_ccsp(n: number, rows: number, cols: number, range: number, seed: number): string;

/**
 * Distributed protocol; `links` are the partition trees.
 */
export function run_dcsp(n: number, rows: number, cols: number, range: number, lp: number, seed: number): string;

export function run_lifetime(n: number, rows: number, cols: number, range: number, lp: number, seed: number, initial_energy: number, tx_cost: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly run_ccsp: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly run_dcsp: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly run_lifetime: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
