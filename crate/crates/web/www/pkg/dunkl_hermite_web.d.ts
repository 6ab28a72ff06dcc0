/* tslint:disable */
/* eslint-disable */

/**
 * The rank-one heat kernel `x ↦ k_t(x, y)` on `xs`: the closed form
 * followed by the eigenfunction series truncated at `degree`.
 */
export function heat_curve(kappa: number, t: number, y: number, degree: number, xs: Float64Array): Float64Array;

/**
 * Values of the first `degree + 1` rank-one Hermite functions on `xs`,
 * one row per function.
 */
export function hermite_functions(kappa: number, degree: number, xs: Float64Array): Float64Array;

/**
 * Operator norms of the Riesz transforms on the span of the basis, one per
 * axis.
 */
export function riesz_norms(group: string, kappa: Float64Array, degree: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly heat_curve: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly hermite_functions: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly riesz_norms: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
