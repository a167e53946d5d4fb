#include "ukc/kernels/kernels.hpp"

#include <cctype>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "ukc/diagnostics.hpp"

namespace ukc::kernels {

using ir::AffineExpr;
using ir::AffineMap;
using ir::Attribute;
using ir::Type;

namespace {

struct KindInfo {
  KernelKind kind;
  const char* name;
};

constexpr KindInfo kKinds[] = {
    {KernelKind::Fill, "fill"},       {KernelKind::Sum, "sum"},
    {KernelKind::ReLU, "relu"},       {KernelKind::Conv3x3, "conv3x3"},
    {KernelKind::MaxPool3x3, "maxpool3x3"}, {KernelKind::SumPool3x3, "sumpool3x3"},
    {KernelKind::MatMul, "matmul"},   {KernelKind::MatMulT, "matmult"},
};

constexpr double kSentinel = -7777.0;

AffineExpr d(unsigned i) { return AffineExpr::dim(i); }

AffineMap map(unsigned dims, std::vector<AffineExpr> results) { return AffineMap{dims, std::move(results)}; }

Type element_type(DType t) { return t == DType::F64 ? Type::f64() : Type::f32(); }

/// Emits `linalg.generic` with a body built by `body(builder, args) -> yielded`.
void emit_generic(ir::Builder& b, const std::vector<ir::Value*>& inputs, const std::vector<ir::Value*>& outputs,
                  const std::vector<AffineMap>& maps, const std::vector<std::string>& iterators,
                  const std::function<std::vector<ir::Value*>(ir::Builder&, const std::vector<ir::Value*>&)>& body) {
  std::vector<ir::Value*> operands = inputs;
  operands.insert(operands.end(), outputs.begin(), outputs.end());
  ir::AttrArray map_attrs;
  for (const auto& m : maps) map_attrs.emplace_back(m);
  auto* op = b.create("linalg.generic", operands, {},
                      {{"indexing_maps", Attribute(map_attrs)},
                       {"iterator_types", Attribute::strings(iterators)},
                       {"operand_segments", Attribute::ints({static_cast<int64_t>(inputs.size()),
                                                             static_cast<int64_t>(outputs.size())})}},
                      1);
  auto* block = op->region().add_block();
  std::vector<ir::Value*> args;
  for (auto* v : operands) {
    const Type& t = v->type();
    args.push_back(block->add_arg(t.is(ir::TypeKind::MemRef) ? t.element() : t));
  }
  ir::Builder inner(block);
  auto yielded = body(inner, args);
  inner.create("linalg.yield", yielded, {});
}

ir::Value* arith(ir::Builder& b, const char* name, ir::Value* x, ir::Value* y) {
  return b.create(name, {x, y}, {x->type()})->result();
}

ir::Value* constant(ir::Builder& b, double v, Type t) {
  return b.create("arith.constant", {}, {t}, {{"value", Attribute(v)}})->result();
}

/// Fill generic writing `value` to every element of the 2-D `out`.
void emit_fill(ir::Builder& b, ir::Value* value, ir::Value* out) {
  emit_generic(b, {value}, {out}, {map(2, {}), AffineMap::identity(2)}, {"parallel", "parallel"},
               [](ir::Builder&, const std::vector<ir::Value*>& a) { return std::vector<ir::Value*>{a[0]}; });
}

}  // namespace

std::string kind_name(KernelKind kind) {
  for (const auto& k : kKinds)
    if (k.kind == kind) return k.name;
  return "?";
}

std::optional<KernelKind> parse_kind(const std::string& name) {
  std::string lower;
  for (char c : name) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (const auto& k : kKinds)
    if (lower == k.name) return k.kind;
  if (lower == "conv") return KernelKind::Conv3x3;
  if (lower == "maxpool") return KernelKind::MaxPool3x3;
  if (lower == "sumpool") return KernelKind::SumPool3x3;
  return std::nullopt;
}

std::string dtype_name(DType dtype) { return dtype == DType::F64 ? "f64" : "f32"; }

std::optional<DType> parse_dtype(const std::string& name) {
  if (name == "f64") return DType::F64;
  if (name == "f32") return DType::F32;
  return std::nullopt;
}

const std::vector<KernelKind>& all_kinds() {
  static const std::vector<KernelKind> kinds = [] {
    std::vector<KernelKind> v;
    for (const auto& k : kKinds) v.push_back(k.kind);
    return v;
  }();
  return kinds;
}

std::string KernelSpec::label() const {
  std::string s = kind_name(kind) + "_" + dtype_name(dtype) + "_" + std::to_string(n) + "x" + std::to_string(m);
  if (has_k()) s += "x" + std::to_string(k);
  return s;
}

std::vector<ArgSpec> arguments(const KernelSpec& s) {
  switch (s.kind) {
    case KernelKind::Fill:
      return {{"out", true, {s.n, s.m}, true}, {"value", false, {}, false}};
    case KernelKind::Sum:
      return {{"x", true, {s.n, s.m}, false}, {"y", true, {s.n, s.m}, false}, {"out", true, {s.n, s.m}, true}};
    case KernelKind::ReLU:
      return {{"x", true, {s.n, s.m}, false}, {"out", true, {s.n, s.m}, true}};
    case KernelKind::Conv3x3:
      return {{"x", true, {s.n + 2, s.m + 2}, false}, {"w", true, {3, 3}, false}, {"out", true, {s.n, s.m}, true}};
    case KernelKind::MaxPool3x3:
    case KernelKind::SumPool3x3:
      return {{"x", true, {s.n + 2, s.m + 2}, false}, {"out", true, {s.n, s.m}, true}};
    case KernelKind::MatMul:
      return {{"a", true, {s.n, s.k}, false}, {"b", true, {s.k, s.m}, false}, {"out", true, {s.n, s.m}, true}};
    case KernelKind::MatMulT:
      return {{"a", true, {s.n, s.k}, false}, {"bt", true, {s.m, s.k}, false}, {"out", true, {s.n, s.m}, true}};
  }
  return {};
}

int64_t footprint_bytes(const KernelSpec& spec) {
  int64_t bytes = 0;
  for (const auto& a : arguments(spec)) {
    if (!a.is_buffer) continue;
    int64_t n = spec.element_size();
    for (auto e : a.shape) n *= e;
    bytes += n;
  }
  return bytes;
}

void validate(const KernelSpec& s) {
  if (s.n < 1 || s.m < 1 || (s.has_k() && s.k < 1))
    throw CompileError("kernel " + kind_name(s.kind) + ": shape extents must be positive");
  if (s.dtype == DType::F32) {
    if (s.kind != KernelKind::Sum && s.kind != KernelKind::ReLU && s.kind != KernelKind::MatMulT)
      throw CompileError("kernel " + kind_name(s.kind) + " has no f32 variant (supported: sum, relu, matmult)");
    int64_t packed = s.kind == KernelKind::MatMulT ? s.k : s.m;
    if (packed % 2 != 0)
      throw CompileError("kernel " + kind_name(s.kind) + " f32 needs an even " +
                         (s.kind == KernelKind::MatMulT ? "k" : "m") + " for two-lane packing");
  }
  if (footprint_bytes(s) > kTcdmBytes)
    throw CompileError("kernel " + s.label() + " needs " + std::to_string(footprint_bytes(s)) +
                       " bytes, exceeding the " + std::to_string(kTcdmBytes) + "-byte TCDM");
}

std::unique_ptr<ir::Operation> build_kernel(const KernelSpec& s) {
  validate(s);
  auto module = ir::make_module();
  ir::Builder mb(&module->body());
  auto* func = mb.create("func.func", {}, {}, {{"sym_name", Attribute(kind_name(s.kind))}}, 1);
  auto* entry = func->region().add_block();
  Type el = element_type(s.dtype);
  std::vector<ir::Value*> args;
  for (const auto& a : arguments(s)) args.push_back(entry->add_arg(a.is_buffer ? Type::memref(el, a.shape) : el));
  ir::Builder b(entry);

  const std::vector<std::string> par2 = {"parallel", "parallel"};
  const std::vector<std::string> window = {"parallel", "parallel", "reduction", "reduction"};
  const std::vector<std::string> mm = {"parallel", "parallel", "reduction"};
  auto fma_body = [](ir::Builder& bb, const std::vector<ir::Value*>& a) {
    auto* p = arith(bb, "arith.mulf", a[0], a[1]);
    return std::vector<ir::Value*>{arith(bb, "arith.addf", a[2], p)};
  };

  switch (s.kind) {
    case KernelKind::Fill:
      emit_fill(b, args[1], args[0]);
      break;
    case KernelKind::Sum:
      emit_generic(b, {args[0], args[1]}, {args[2]}, {AffineMap::identity(2), AffineMap::identity(2), AffineMap::identity(2)},
                   par2, [](ir::Builder& bb, const std::vector<ir::Value*>& a) {
                     return std::vector<ir::Value*>{arith(bb, "arith.addf", a[0], a[1])};
                   });
      break;
    case KernelKind::ReLU:
      emit_generic(b, {args[0]}, {args[1]}, {AffineMap::identity(2), AffineMap::identity(2)}, par2,
                   [](ir::Builder& bb, const std::vector<ir::Value*>& a) {
                     auto* zero = constant(bb, 0.0, a[0]->type());
                     return std::vector<ir::Value*>{arith(bb, "arith.maximumf", a[0], zero)};
                   });
      break;
    case KernelKind::Conv3x3: {
      emit_fill(b, constant(b, 0.0, el), args[2]);
      AffineMap x = map(4, {d(0) + d(2), d(1) + d(3)});
      AffineMap w = map(4, {d(2), d(3)});
      AffineMap o = map(4, {d(0), d(1)});
      emit_generic(b, {args[0], args[1]}, {args[2]}, {x, w, o}, window, fma_body);
      break;
    }
    case KernelKind::MaxPool3x3:
    case KernelKind::SumPool3x3: {
      bool is_max = s.kind == KernelKind::MaxPool3x3;
      double init = is_max ? -std::numeric_limits<double>::infinity() : 0.0;
      emit_fill(b, constant(b, init, el), args[1]);
      AffineMap x = map(4, {d(0) + d(2), d(1) + d(3)});
      AffineMap o = map(4, {d(0), d(1)});
      const char* op = is_max ? "arith.maximumf" : "arith.addf";
      emit_generic(b, {args[0]}, {args[1]}, {x, o}, window, [op](ir::Builder& bb, const std::vector<ir::Value*>& a) {
        return std::vector<ir::Value*>{arith(bb, op, a[1], a[0])};
      });
      break;
    }
    case KernelKind::MatMul:
    case KernelKind::MatMulT: {
      emit_fill(b, constant(b, 0.0, el), args[2]);
      AffineMap a = map(3, {d(0), d(2)});
      AffineMap bm = s.kind == KernelKind::MatMul ? map(3, {d(2), d(1)}) : map(3, {d(1), d(2)});
      AffineMap c = map(3, {d(0), d(1)});
      emit_generic(b, {args[0], args[1]}, {args[2]}, {a, bm, c}, mm, fma_body);
      break;
    }
  }
  b.create("func.return", {}, {});
  return module;
}

KernelData generate_inputs(const KernelSpec& spec, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  auto draw = [&] {
    double v = dist(rng);
    return spec.dtype == DType::F32 ? static_cast<double>(static_cast<float>(v)) : v;
  };
  KernelData data;
  for (const auto& a : arguments(spec)) {
    if (!a.is_buffer) {
      data.scalars.push_back(draw());
      continue;
    }
    int64_t n = 1;
    for (auto e : a.shape) n *= e;
    std::vector<double> buf(static_cast<size_t>(n), kSentinel);
    if (!a.is_output)
      for (auto& v : buf) v = draw();
    data.buffers.push_back(std::move(buf));
  }
  return data;
}

std::vector<double> compute_reference(const KernelSpec& s, const KernelData& data) {
  const auto n = static_cast<size_t>(s.n), m = static_cast<size_t>(s.m), k = static_cast<size_t>(s.k);
  std::vector<double> out(n * m);
  const auto& x = data.buffers.at(0);
  switch (s.kind) {
    case KernelKind::Fill:
      for (auto& v : out) v = data.scalars.at(0);
      break;
    case KernelKind::Sum: {
      const auto& y = data.buffers.at(1);
      for (size_t i = 0; i < out.size(); ++i)
        out[i] = s.dtype == DType::F32 ? static_cast<double>(static_cast<float>(x[i]) + static_cast<float>(y[i]))
                                       : x[i] + y[i];
      break;
    }
    case KernelKind::ReLU:
      for (size_t i = 0; i < out.size(); ++i) out[i] = std::fmax(x[i], 0.0);
      break;
    case KernelKind::Conv3x3:
    case KernelKind::MaxPool3x3:
    case KernelKind::SumPool3x3: {
      size_t w = m + 2;
      for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < m; ++j) {
          double acc = s.kind == KernelKind::MaxPool3x3 ? -std::numeric_limits<double>::infinity() : 0.0;
          for (size_t kh = 0; kh < 3; ++kh)
            for (size_t kw = 0; kw < 3; ++kw) {
              double v = x[(i + kh) * w + j + kw];
              if (s.kind == KernelKind::Conv3x3)
                acc = std::fma(v, data.buffers.at(1)[kh * 3 + kw], acc);
              else if (s.kind == KernelKind::MaxPool3x3)
                acc = std::fmax(acc, v);
              else
                acc = acc + v;
            }
          out[i * m + j] = acc;
        }
      break;
    }
    case KernelKind::MatMul:
    case KernelKind::MatMulT: {
      const auto& b = data.buffers.at(1);
      bool t = s.kind == KernelKind::MatMulT;
      for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < m; ++j) {
          if (s.dtype == DType::F32) {
            float lo = 0.0f, hi = 0.0f;
            for (size_t kk = 0; kk < k; kk += 2) {
              lo = std::fmaf(static_cast<float>(x[i * k + kk]), static_cast<float>(b[j * k + kk]), lo);
              hi = std::fmaf(static_cast<float>(x[i * k + kk + 1]), static_cast<float>(b[j * k + kk + 1]), hi);
            }
            out[i * m + j] = static_cast<double>((0.0f + lo) + hi);
            continue;
          }
          double acc = 0.0;
          for (size_t kk = 0; kk < k; ++kk) acc = std::fma(x[i * k + kk], t ? b[j * k + kk] : b[kk * m + j], acc);
          out[i * m + j] = acc;
        }
      break;
    }
  }
  return out;
}

int64_t flop_count(const KernelSpec& s) {
  switch (s.kind) {
    case KernelKind::Fill:
    case KernelKind::Sum:
    case KernelKind::ReLU:
      return s.n * s.m;
    case KernelKind::Conv3x3:
      return 18 * s.n * s.m;
    case KernelKind::MaxPool3x3:
    case KernelKind::SumPool3x3:
      return 9 * s.n * s.m;
    case KernelKind::MatMul:
    case KernelKind::MatMulT:
      return 2 * s.n * s.m * s.k;
  }
  throw CompileError("unknown kernel");
}

std::vector<KernelSpec> register_shapes() {
  using K = KernelKind;
  return {
      {K::Fill, 4, 4, 1, DType::F64},       {K::ReLU, 4, 4, 1, DType::F64},    {K::Sum, 4, 4, 1, DType::F64},
      {K::MaxPool3x3, 4, 4, 1, DType::F64}, {K::SumPool3x3, 4, 4, 1, DType::F64}, {K::Conv3x3, 4, 4, 1, DType::F64},
      {K::MatMul, 4, 16, 8, DType::F64},    {K::ReLU, 4, 8, 1, DType::F32},    {K::Sum, 4, 8, 1, DType::F32},
      {K::MatMulT, 4, 16, 16, DType::F32},
  };
}

}  // namespace ukc::kernels
