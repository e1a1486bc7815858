#include "rlp/numerics/graph.hpp"

namespace rlp::numerics {

std::string_view primitive_name(Primitive op) {
  switch (op) {
    case Primitive::Input: return "input";
    case Primitive::Parameter: return "parameter";
    case Primitive::Constant: return "constant";
    case Primitive::MatMul: return "matmul";
    case Primitive::MatMulTransposed: return "matmul_transposed";
    case Primitive::Add: return "add";
    case Primitive::AddRowBias: return "add_row_bias";
    case Primitive::Sub: return "sub";
    case Primitive::Mul: return "mul";
    case Primitive::Scale: return "scale";
    case Primitive::AddScalar: return "add_scalar";
    case Primitive::Exp: return "exp";
    case Primitive::Gelu: return "gelu";
    case Primitive::Minimum: return "minimum";
    case Primitive::Clamp: return "clamp";
    case Primitive::LayerNorm: return "layer_norm";
    case Primitive::LogSoftmax: return "log_softmax";
    case Primitive::CausalSoftmax: return "causal_softmax";
    case Primitive::Embedding: return "embedding";
    case Primitive::SliceCols: return "slice_cols";
    case Primitive::ConcatCols: return "concat_cols";
    case Primitive::GatherRows: return "gather_rows";
    case Primitive::Pick: return "pick";
    case Primitive::Sum: return "sum";
  }
  return "unknown";
}

std::string shape_string(const std::vector<Index>& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

template class BasicGraph<double>;

}  // namespace rlp::numerics
