/* tslint:disable */
/* eslint-disable */

/**
 * A centreline with its curvature and twist.
 */
export class Band {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Centreline nodes as flat `x, y, z` triples, closing node included.
     */
    centerline(): Float64Array;
    /**
     * Position and frame mismatch between the two ends.
     */
    closureGap(): Float64Array;
    curvature(): Float64Array;
    /**
     * Band of length 2π with `K(s) = Σ k_j cos(f_j s)` and
     * `W(s) = Σ w_j cos(j s)`. For a Möbius band `f_j = j + 1/2`, which makes
     * `K` change sign over one lap; otherwise `f_j = j`.
     */
    static fromFourier(n: number, k: Float64Array, w: Float64Array, moebius: boolean): Band;
    /**
     * Arclength of the singular point, or NaN if the band has none.
     */
    singularPoint(): number;
    /**
     * Relax a Möbius band of length 2π on `n` cells from the built-in
     * initial guess.
     */
    static solve(n: number): Band;
    /**
     * Strip triangles of full width `width` as flat vertex triples,
     * three vertices per triangle.
     */
    strip(width: number): Float64Array;
    twist(): Float64Array;
    readonly converged: boolean;
    readonly energy: number;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_band_free: (a: number, b: number) => void;
    readonly band_centerline: (a: number) => [number, number];
    readonly band_closureGap: (a: number) => [number, number];
    readonly band_converged: (a: number) => number;
    readonly band_curvature: (a: number) => [number, number];
    readonly band_energy: (a: number) => number;
    readonly band_fromFourier: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly band_singularPoint: (a: number) => number;
    readonly band_solve: (a: number) => [number, number, number];
    readonly band_strip: (a: number, b: number) => [number, number, number, number];
    readonly band_twist: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
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
