/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demo_free: (a: number, b: number) => void;
export const demo_height: (a: number) => number;
export const demo_legend: (a: number) => [number, number];
export const demo_new: () => number;
export const demo_quick_train: (a: number, b: number, c: number) => [number, number, number, number];
export const demo_render_scene: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const demo_segment: (a: number, b: number) => [number, number, number, number];
export const demo_summary: (a: number) => [number, number];
export const demo_trained_kappa: (a: number) => [number, number];
export const demo_width: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
