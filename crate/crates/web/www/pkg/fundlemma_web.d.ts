/* tslint:disable */
/* eslint-disable */

/**
 * Identification of the 20-sample example record after blanking `knockouts`
 * (comma separated time steps) in addition to the steps already missing.
 */
export function identify_record(knockouts: string): string;

/**
 * Excitation check of the input columns of a trajectory CSV; missing rows split segments.
 */
export function pe_check(csv: string, order: number): string;

/**
 * Data-driven LQR for the batch reactor from `experiments` seeded runs of
 * `len` samples, next to the state growth of one run of `long_len` samples.
 */
export function reactor_lqr(seed: number, experiments: number, len: number, long_len: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly identify_record: (a: number, b: number) => [number, number];
    readonly pe_check: (a: number, b: number, c: number) => [number, number];
    readonly reactor_lqr: (a: number, b: number, c: number, d: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
