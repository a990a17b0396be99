export {
  NpyArray,
  NpyDtype,
  NpyError,
  NpyBadMagic,
  NpyUnsupportedVersion,
  NpyUnsupportedDtype,
  NpyFortranOrder,
  NpyTruncated,
  encodeNpy,
  decodeNpy,
  float64,
} from "./npy.js";
export { Bundle, OracleBlock, writeBundle } from "./manifest.js";
export {
  AttrensCliError,
  AttrensInvalidInput,
  AttrensPreconditionFailed,
  AttrensOracleFailure,
  attrensBin,
  runAttrens,
  runAttrensAsync,
  normalize,
  ensemble,
  evaluate,
  evaluateAsync,
  bench,
} from "./cli.js";
export { CallbackOracleServer, PredictFn, ExplainFn } from "./callback.js";
