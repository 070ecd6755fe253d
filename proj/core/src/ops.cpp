#include "pref/ops.hpp"

namespace pref::ad {

const char* op_kind_name(OpKind kind) {
  switch (kind) {
    case OpKind::kAdd: return "add";
    case OpKind::kMul: return "mul";
    case OpKind::kSub: return "sub";
    case OpKind::kNeg: return "neg";
    case OpKind::kExp: return "exp";
    case OpKind::kSin: return "sin";
    case OpKind::kCos: return "cos";
    case OpKind::kRelu: return "relu";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kMatmul: return "matmul";
    case OpKind::kConcat: return "concat";
    case OpKind::kSlice: return "slice";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kSqdiff: return "sqdiff";
    case OpKind::kScale: return "scale";
    case OpKind::kClamp: return "clamp";
    case OpKind::kRepeatRows: return "repeat_rows";
    case OpKind::kReshapeFlat: return "reshape";
    case OpKind::kComposite: return "composite";
  }
  return "unknown";
}

}  // namespace pref::ad
