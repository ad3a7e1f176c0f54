/* tslint:disable */
/* eslint-disable */

/**
 * One trained federation plus what the page needs to draw it.
 */
export class Lab {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Client curves, their pointwise average and the weight-averaged
     * model's curve for one (feature, class), on the raw feature scale.
     */
    curves(feature: number, _class: number): string;
    /**
     * Per-feature logit terms, bias and class probabilities for one raw
     * input row.
     */
    decompose(raw: Float64Array): string;
    /**
     * Trains a federated NAM on the bundled Iris data.
     */
    constructor(seed: number, num_clients: number, rounds: number);
    /**
     * Summary: feature names, class names, test metrics, round count and
     * global contribution ranking.
     */
    summary(): string;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_lab_free: (a: number, b: number) => void;
    readonly lab_curves: (a: number, b: number, c: number) => [number, number, number, number];
    readonly lab_decompose: (a: number, b: number, c: number) => [number, number, number, number];
    readonly lab_new: (a: number, b: number, c: number) => [number, number, number];
    readonly lab_summary: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
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
