/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_lattice_free: (a: number, b: number) => void;
export const lattice_alpha: (a: number) => number;
export const lattice_density: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const lattice_ipr_curve: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
export const lattice_new: (a: number) => [number, number, number];
export const lattice_t: (a: number) => number;
export const lattice_vc_over_t: (a: number, b: number, c: number) => [number, number, number];
export const log_grid: (a: number, b: number, c: number) => [number, number];
export const potential_curve: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
