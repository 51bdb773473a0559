/* tslint:disable */
/* eslint-disable */

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    height(): number;
    /**
     * Species names and label colors as JSON.
     */
    legend(): string;
    constructor();
    /**
     * Trains and returns the per-epoch loss trace as JSON.
     */
    quick_train(seed: number, epochs: number): string;
    /**
     * RGBA pixels of the rendered scene; details via `summary()`.
     */
    render_scene(seed: number, week: number, overlap: number): Uint8Array;
    /**
     * RGBA label map of the current scene; details via `summary()`.
     */
    segment(kappa: number): Uint8Array;
    /**
     * JSON summary of the last render or segmentation.
     */
    summary(): string;
    trained_kappa(): number | undefined;
    width(): number;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_height: (a: number) => number;
    readonly demo_legend: (a: number) => [number, number];
    readonly demo_new: () => number;
    readonly demo_quick_train: (a: number, b: number, c: number) => [number, number, number, number];
    readonly demo_render_scene: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly demo_segment: (a: number, b: number) => [number, number, number, number];
    readonly demo_summary: (a: number) => [number, number];
    readonly demo_trained_kappa: (a: number) => [number, number];
    readonly demo_width: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
