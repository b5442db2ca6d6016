/* tslint:disable */
/* eslint-disable */

/**
 * A running integration of one flow on a periodic grid.
 */
export class Simulation {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Advances `steps` RK4 steps.
     */
    advance(steps: number): void;
    driftJson(): string;
    /**
     * Values of field `i` (0-based) on the grid.
     */
    field(i: number): Float64Array;
    grid(): Float64Array;
    /**
     * `profile` is `zero`, `sine[:a,mode]`, `gaussian[:a,w]` or `sech[:a,w]`.
     */
    constructor(rank: number, n: number, points: number, length: number, dt: number, profile: string);
    /**
     * `dt` times the fastest linear growth rate; RK4 is stable below about 2.8.
     */
    stability(): number;
    time(): number;
}

export function checkReport(rank: number, flows: string, checks: string): string;

export function flowSummary(rank: number, n: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_simulation_free: (a: number, b: number) => void;
    readonly checkReport: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly flowSummary: (a: number, b: number) => [number, number, number, number];
    readonly simulation_advance: (a: number, b: number) => [number, number];
    readonly simulation_driftJson: (a: number) => [number, number];
    readonly simulation_field: (a: number, b: number) => [number, number];
    readonly simulation_grid: (a: number) => [number, number];
    readonly simulation_new: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
    readonly simulation_stability: (a: number) => number;
    readonly simulation_time: (a: number) => number;
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
