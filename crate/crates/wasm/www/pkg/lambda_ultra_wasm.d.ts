/* tslint:disable */
/* eslint-disable */

/**
 * A 2 x 3 grid over the Boolean square, as a starting example.
 */
export function grid_example(): string;

/**
 * Hasse diagram data: elements with their height, cover pairs, and
 * whether the lattice is distributive.
 */
export function hasse(input: string): string;

/**
 * Ramsey check for linearly ordered sets (ordered spaces over the
 * two-element chain): colour the `a`-subsets of a `c`-chain with `r`
 * colours and look for a monochromatic `b`-subset.
 */
export function ramsey(a: number, b: number, c: number, r: number): string;

/**
 * The classes of every level of a space given as JSON.
 */
export function space_classes(input: string): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly grid_example: () => [number, number];
    readonly hasse: (a: number, b: number) => [number, number, number, number];
    readonly ramsey: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly space_classes: (a: number, b: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
