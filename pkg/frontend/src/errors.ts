/** Input file does not match the schema the renderer understands. */
export class SchemaError extends Error {}

/** Bad command-line invocation. */
export class UsageError extends Error {}
