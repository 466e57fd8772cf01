/* tslint:disable */
/* eslint-disable */

/**
 * CLT statistics `sum_x f(x / sqrt(t/2)) eta_t^x`, one per independent run.
 */
export function clt_samples(d: number, t: number, trials: number, seed: bigint, _function: string): Float64Array;

/**
 * `integral f d gamma_d`, where the CLT statistics concentrate.
 */
export function gaussian_integral(d: number, _function: string): number;

/**
 * One run of the averaging process from a unit mass at the origin, read
 * along the first axis. Stride 3: `x, mass, heat kernel h_t(0, x)`.
 */
export function mass_profile(d: number, t: number, seed: bigint): Float64Array;

/**
 * Rescaled return probabilities of the difference walk. Stride 3:
 * `n, p~_n (2 pi n / d)^{d/2}, predicted limit`.
 */
export function return_curve(d: number, steps: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly clt_samples: (a: number, b: number, c: number, d: bigint, e: number, f: number) => [number, number, number, number];
    readonly gaussian_integral: (a: number, b: number, c: number) => [number, number, number];
    readonly mass_profile: (a: number, b: number, c: bigint) => [number, number, number, number];
    readonly return_curve: (a: number, b: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
