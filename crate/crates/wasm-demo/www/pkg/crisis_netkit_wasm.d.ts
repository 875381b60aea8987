/* tslint:disable */
/* eslint-disable */

/**
 * Per-user activity proportions of a synthetic stream, negative-log and
 * Box-Cox transformed, with density estimate and normal Q-Q pairs.
 */
export function activity_transforms(n_users: number, days: number, bandwidth: number, seed: number): string;

/**
 * Synthetic gravity scenario: location-pair communication counts, the
 * distance-decay curve and surrogate edge widths.
 */
export function distance_decay(n_users: number, n_locations: number, gravity_exponent: number, seed: number): string;

/**
 * Draws `n` values from a power law with exponent `alpha` (or from a
 * shifted exponential), fits the exponent and runs the bootstrap KS test.
 */
export function power_law_tail(alpha: number, n: number, exponential: boolean, replicates: number, seed: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly activity_transforms: (a: number, b: number, c: number, d: number) => [number, number];
    readonly distance_decay: (a: number, b: number, c: number, d: number) => [number, number];
    readonly power_law_tail: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
