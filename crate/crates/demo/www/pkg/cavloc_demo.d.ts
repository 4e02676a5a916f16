/* tslint:disable */
/* eslint-disable */

export class Lattice {
    free(): void;
    [Symbol.dispose](): void;
    alpha(): number;
    density(v0_over_vc: number, c: number, delta_c_prime: number, sites: number): Float64Array;
    ipr_curve(c: number, delta_c_prime: number, sites: number, start: number, stop: number, count: number): Float64Array;
    constructor(depth_w0: number);
    /**
     * Hopping in E_r.
     */
    t(): number;
    /**
     * Analytic critical strength in units of `t` (`2` for `c == 0`).
     */
    vc_over_t(c: number, delta_c_prime: number): number;
}

export function log_grid(start: number, stop: number, count: number): Float64Array;

export function potential_curve(c: number, delta_c_prime: number, x_max: number, points: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_lattice_free: (a: number, b: number) => void;
    readonly lattice_alpha: (a: number) => number;
    readonly lattice_density: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly lattice_ipr_curve: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
    readonly lattice_new: (a: number) => [number, number, number];
    readonly lattice_t: (a: number) => number;
    readonly lattice_vc_over_t: (a: number, b: number, c: number) => [number, number, number];
    readonly log_grid: (a: number, b: number, c: number) => [number, number];
    readonly potential_curve: (a: number, b: number, c: number, d: number) => [number, number, number, number];
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
