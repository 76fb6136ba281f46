// Mirrors of the service's JSON responses. Every field rendered by the
// dashboard maps 1:1 onto one of these; nothing is synthesized client-side.
export {};
