/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_band_free: (a: number, b: number) => void;
export const band_centerline: (a: number) => [number, number];
export const band_closureGap: (a: number) => [number, number];
export const band_converged: (a: number) => number;
export const band_curvature: (a: number) => [number, number];
export const band_energy: (a: number) => number;
export const band_fromFourier: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
export const band_singularPoint: (a: number) => number;
export const band_solve: (a: number) => [number, number, number];
export const band_strip: (a: number, b: number) => [number, number, number, number];
export const band_twist: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
