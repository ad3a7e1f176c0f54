/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_lab_free: (a: number, b: number) => void;
export const lab_curves: (a: number, b: number, c: number) => [number, number, number, number];
export const lab_decompose: (a: number, b: number, c: number) => [number, number, number, number];
export const lab_new: (a: number, b: number, c: number) => [number, number, number];
export const lab_summary: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_start: () => void;
