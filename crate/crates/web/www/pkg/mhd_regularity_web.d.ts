/* tslint:disable */
/* eslint-disable */

/**
 * See [`gamma_curve_rows`].
 */
export function gamma_curves(gamma: number, s_max: number, samples: number): Float64Array;

/**
 * See [`kernel_profile_rows`].
 */
export function kernel_profile(alpha: number, ratio_max: number, samples: number): Float64Array;

/**
 * See [`pressure_slice_rows`].
 */
export function pressure_slice(n: number, steps: number, dt: number, random: boolean, seed: bigint): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly gamma_curves: (a: number, b: number, c: number) => [number, number, number, number];
    readonly kernel_profile: (a: number, b: number, c: number) => [number, number, number, number];
    readonly pressure_slice: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
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
