#include "ukc/sim/evaluate.hpp"

#include <cmath>
#include <unordered_map>
#include <variant>

#include "ukc/diagnostics.hpp"
#include "ukc/dialects/memref_stream.hpp"

namespace ukc::sim {

namespace {

using ir::Operation;
using ir::TypeKind;
using ir::Value;

struct Num {
  TypeKind kind = TypeKind::F64;
  double lo = 0.0;
  double hi = 0.0;
};

struct View {
  std::vector<double>* data = nullptr;
  std::vector<int64_t> shape;
  bool packed = false;
  TypeKind element = TypeKind::F64;
};

struct Stream {
  View view;
  std::vector<int64_t> elements;
  size_t pos = 0;
  bool write = false;
};

using RVal = std::variant<Num, View, Stream*>;

float f(double v) { return static_cast<float>(v); }

Num zero_of(TypeKind k) { return Num{k, 0.0, 0.0}; }

int64_t linear_index(const View& v, const std::vector<int64_t>& idx) {
  if (idx.size() != v.shape.size()) throw SimError("index rank does not match memref rank");
  int64_t lin = 0;
  for (size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0 || idx[r] >= v.shape[r])
      throw SimError("memref index " + std::to_string(idx[r]) + " out of bounds for extent " +
                     std::to_string(v.shape[r]));
    lin = lin * v.shape[r] + idx[r];
  }
  return lin;
}

Num load(const View& v, int64_t lin) {
  auto i = static_cast<size_t>(lin);
  if (v.packed) return Num{TypeKind::F32x2, (*v.data)[2 * i], (*v.data)[2 * i + 1]};
  return Num{v.element, (*v.data)[i], 0.0};
}

void store(const View& v, int64_t lin, const Num& x) {
  auto i = static_cast<size_t>(lin);
  if (v.packed) {
    (*v.data)[2 * i] = x.lo;
    (*v.data)[2 * i + 1] = x.hi;
  } else {
    (*v.data)[i] = v.element == TypeKind::F32 ? static_cast<double>(f(x.lo)) : x.lo;
  }
}

void for_each_point(const std::vector<int64_t>& extents, const std::function<void(const std::vector<int64_t>&)>& fn) {
  for (auto e : extents)
    if (e <= 0) return;
  std::vector<int64_t> idx(extents.size(), 0);
  while (true) {
    fn(idx);
    int d = static_cast<int>(extents.size()) - 1;
    while (d >= 0 && ++idx[static_cast<size_t>(d)] == extents[static_cast<size_t>(d)]) {
      idx[static_cast<size_t>(d)] = 0;
      --d;
    }
    if (d < 0) return;
  }
}

Num binary(const std::string& name, const Num& a, const Num& b) {
  auto lane = [&](double x, double y, bool single) -> double {
    if (name == "arith.addf") return single ? f(x) + f(y) : x + y;
    if (name == "arith.subf") return single ? f(x) - f(y) : x - y;
    if (name == "arith.mulf") return single ? f(x) * f(y) : x * y;
    if (name == "arith.maximumf") return single ? std::fmax(f(x), f(y)) : std::fmax(x, y);
    throw SimError("unsupported arithmetic op " + name);
  };
  bool single = a.kind != TypeKind::F64;
  Num r{a.kind, lane(a.lo, b.lo, single), 0.0};
  if (a.kind == TypeKind::F32x2) r.hi = lane(a.hi, b.hi, true);
  return r;
}

Num fused(const Num& a, const Num& b, const Num& c) {
  if (a.kind == TypeKind::F64) return Num{a.kind, std::fma(a.lo, b.lo, c.lo), 0.0};
  Num r{a.kind, std::fmaf(f(a.lo), f(b.lo), f(c.lo)), 0.0};
  if (a.kind == TypeKind::F32x2) r.hi = std::fmaf(f(a.hi), f(b.hi), f(c.hi));
  return r;
}

class Evaluator {
 public:
  void run_function(const Operation& func, kernels::KernelData& data) {
    const auto& entry = func.body();
    size_t buf = 0, scalar = 0;
    for (const auto& a : entry.args()) {
      const auto& t = a->type();
      if (t.is(TypeKind::MemRef)) {
        if (buf >= data.buffers.size()) throw SimError("not enough buffers for function arguments");
        auto& vec = data.buffers[buf++];
        View v{&vec, t.shape(), false, t.element().kind()};
        if (static_cast<int64_t>(vec.size()) != t.num_elements())
          throw SimError("buffer size does not match argument type " + t.str());
        env_[a.get()] = v;
      } else {
        if (scalar >= data.scalars.size()) throw SimError("not enough scalars for function arguments");
        env_[a.get()] = Num{t.kind(), data.scalars[scalar++], 0.0};
      }
    }
    run_block(entry);
  }

 private:
  const RVal& get(const Value* v) const {
    auto it = env_.find(v);
    if (it == env_.end()) throw SimError("value used before definition");
    return it->second;
  }
  const Num& num(const Value* v) const {
    const auto* n = std::get_if<Num>(&get(v));
    if (!n) throw SimError("expected a scalar value");
    return *n;
  }

  void run_block(const ir::Block& block) {
    for (const auto& op : block.op_list()) run_op(*op);
  }

  void run_op(const Operation& op) {
    const auto& name = op.name();
    if (name == "func.return" || name == "linalg.yield" || name == "memref_stream.yield") return;
    if (name == "arith.constant") {
      double v = op.attr("value").as_float();
      auto k = op.result()->type().kind();
      env_[op.result()] = Num{k, v, k == TypeKind::F32x2 ? v : 0.0};
    } else if (name == "memref_stream.cast_packed") {
      View v = std::get<View>(get(op.operand(0)));
      v.shape = op.result()->type().shape();
      v.packed = true;
      v.element = TypeKind::F32x2;
      env_[op.result()] = v;
    } else if (name == "memref_stream.streaming_region") {
      run_streaming_region(op);
    } else if (name == "linalg.generic" || name == "memref_stream.generic") {
      run_generic(const_cast<Operation*>(&op));
    } else if (op.dialect() == "arith" || op.dialect() == "vector") {
      env_[op.result()] = scalar_op(op);
    } else {
      throw SimError("cannot evaluate operation " + name);
    }
  }

  Num scalar_op(const Operation& op) {
    if (op.is("vector.reduce_add")) {
      const Num& v = num(op.operand(0));
      const Num& acc = num(op.operand(1));
      return Num{TypeKind::F32, (f(acc.lo) + f(v.lo)) + f(v.hi), 0.0};
    }
    if (op.is("arith.addf")) {
      for (unsigned k = 0; k < 2; ++k) {
        const Operation* def = op.operand(k)->defining_op();
        if (def && def->is("arith.mulf") && op.operand(k)->num_uses() == 1)
          return fused(num(def->operand(0)), num(def->operand(1)), num(op.operand(1 - k)));
      }
    }
    return binary(op.name(), num(op.operand(0)), num(op.operand(1)));
  }

  std::vector<Num> run_body(const ir::Block& body, const std::vector<Num>& args) {
    for (unsigned i = 0; i < body.num_args(); ++i) env_[body.arg(i)] = args.at(i);
    run_block(body);
    std::vector<Num> out;
    for (auto* v : body.terminator()->operands()) out.push_back(num(v));
    return out;
  }

  void run_streaming_region(const Operation& op) {
    const auto& pats = op.attr("patterns").as_array();
    auto num_inputs = op.int_attr("num_inputs");
    std::vector<Stream*> created;
    for (unsigned i = 0; i < op.num_operands(); ++i) {
      const auto& p = pats.at(i).as_opaque();
      auto ub = p.get("ub")->as_ints();
      auto map = p.get("index_map")->as_map();
      auto s = std::make_unique<Stream>();
      s->view = std::get<View>(get(op.operand(i)));
      s->write = static_cast<int64_t>(i) >= num_inputs;
      for_each_point(ub, [&](const std::vector<int64_t>& pt) {
        s->elements.push_back(linear_index(s->view, map.eval(pt)));
      });
      env_[op.body().arg(i)] = s.get();
      created.push_back(s.get());
      streams_.push_back(std::move(s));
    }
    run_block(op.body());
    for (size_t i = 0; i < created.size(); ++i)
      if (created[i]->pos != created[i]->elements.size())
        throw SimError("stream " + std::to_string(i) + " consumed " + std::to_string(created[i]->pos) + " of " +
                       std::to_string(created[i]->elements.size()) + " elements");
  }

  Num read_operand(const Value* v, const ir::AffineMap& map, const std::vector<int64_t>& point) {
    const RVal& r = get(v);
    if (const auto* n = std::get_if<Num>(&r)) return *n;
    if (const auto* view = std::get_if<View>(&r)) return load(*view, linear_index(*view, map.eval(point)));
    Stream* s = std::get<Stream*>(r);
    if (s->write) throw SimError("read from a writable stream");
    if (s->pos >= s->elements.size()) throw SimError("stream read past its end");
    return load(s->view, s->elements[s->pos++]);
  }

  void write_operand(const Value* v, const ir::AffineMap& map, const std::vector<int64_t>& point, const Num& x) {
    const RVal& r = get(v);
    if (const auto* view = std::get_if<View>(&r)) return store(*view, linear_index(*view, map.eval(point)), x);
    Stream* s = std::get<Stream*>(r);
    if (!s->write) throw SimError("write to a readable stream");
    if (s->pos >= s->elements.size()) throw SimError("stream write past its end");
    store(s->view, s->elements[s->pos++], x);
  }

  void run_generic(Operation* op) {
    ms::GenericView g(op);
    auto bounds = g.bounds();
    auto maps = g.maps();
    auto its = g.iterator_types();
    size_t n = bounds.size();
    bool interleaved = !its.empty() && its.back() == ms::kInterleaved;
    int64_t u = interleaved ? bounds.back() : 1;
    size_t outer_n = interleaved ? n - 1 : n;
    unsigned ni = g.num_inputs(), no = g.num_outputs();
    bool lane_sum = op->has_attr("lane_sum");
    const auto& body = g.body();

    bool any_reduced = false, all_reduced = true;
    for (unsigned o = 0; o < no; ++o) {
      bool red = maps[ni + o].num_dims != n;
      any_reduced |= red;
      all_reduced &= red;
    }
    if (any_reduced && !all_reduced) throw SimError("generic mixes reduced and full output maps");

    auto full_point = [&](std::vector<int64_t> outer, int64_t c) {
      if (interleaved) outer.push_back(c);
      return outer;
    };
    auto output_point = [&](unsigned o, const std::vector<int64_t>& point) {
      if (maps[ni + o].num_dims == n) return point;
      std::vector<int64_t> reduced;
      for (size_t d = 0; d < n; ++d)
        if (its[d] != ms::kReduction) reduced.push_back(point[d]);
      return reduced;
    };
    auto gather_inputs = [&](const std::vector<int64_t>& outer, std::vector<Num>& args) {
      for (unsigned i = 0; i < ni; ++i)
        for (int64_t c = 0; c < u; ++c) args.push_back(read_operand(g.input(i), maps[i], full_point(outer, c)));
    };

    if (!g.has_reduction() || all_reduced) {
      std::vector<int64_t> par, red;
      for (size_t d = 0; d < outer_n; ++d) {
        bool is_red = its[d] == ms::kReduction;
        if (!is_red && !red.empty()) throw SimError("parallel dims must precede reduction dims");
        (is_red ? red : par).push_back(bounds[d]);
      }
      for_each_point(par, [&](const std::vector<int64_t>& q) {
        std::vector<Num> acc, base;
        std::vector<int64_t> first = q;
        first.resize(outer_n, 0);
        for (unsigned o = 0; o < no; ++o)
          for (int64_t c = 0; c < u; ++c) {
            auto pt = full_point(first, c);
            Value* arg = g.output_arg(o, static_cast<unsigned>(c));
            Num init = zero_of(arg->type().kind());
            if (g.num_inits() > 0)
              init = num(g.init(o));
            else if (lane_sum || arg->has_uses())
              init = read_operand(g.output(o), maps[ni + o], output_point(o, pt));
            if (lane_sum) {
              base.push_back(init);
              acc.push_back(zero_of(TypeKind::F32x2));
            } else {
              acc.push_back(init);
            }
          }
        auto step = [&](const std::vector<int64_t>& r) {
          std::vector<int64_t> outer = q;
          outer.insert(outer.end(), r.begin(), r.end());
          std::vector<Num> args;
          gather_inputs(outer, args);
          args.insert(args.end(), acc.begin(), acc.end());
          acc = run_body(body, args);
        };
        if (red.empty())
          step({});
        else
          for_each_point(red, step);
        for (unsigned o = 0; o < no; ++o)
          for (int64_t c = 0; c < u; ++c) {
            Num v = acc[o * static_cast<size_t>(u) + static_cast<size_t>(c)];
            if (lane_sum) {
              const Num& b0 = base[o * static_cast<size_t>(u) + static_cast<size_t>(c)];
              v = Num{TypeKind::F32, (f(b0.lo) + f(v.lo)) + f(v.hi), 0.0};
            }
            write_operand(g.output(o), maps[ni + o], output_point(o, full_point(first, c)), v);
          }
      });
      return;
    }

    // Accumulation through memory: every iteration reads and writes the output.
    std::vector<int64_t> outer_bounds(bounds.begin(), bounds.begin() + static_cast<long>(outer_n));
    for_each_point(outer_bounds, [&](const std::vector<int64_t>& p) {
      std::vector<Num> args;
      gather_inputs(p, args);
      for (unsigned o = 0; o < no; ++o)
        for (int64_t c = 0; c < u; ++c) {
          Value* arg = g.output_arg(o, static_cast<unsigned>(c));
          args.push_back(arg->has_uses() ? read_operand(g.output(o), maps[ni + o], full_point(p, c))
                                         : zero_of(arg->type().kind()));
        }
      auto out = run_body(body, args);
      for (unsigned o = 0; o < no; ++o)
        for (int64_t c = 0; c < u; ++c)
          write_operand(g.output(o), maps[ni + o], full_point(p, c), out[o * static_cast<size_t>(u) + static_cast<size_t>(c)]);
    });
  }

  std::unordered_map<const Value*, RVal> env_;
  std::vector<std::unique_ptr<Stream>> streams_;
};

}  // namespace

void evaluate(const ir::Operation& module, kernels::KernelData& data) {
  const Operation* func = nullptr;
  for (const auto& op : module.body().op_list())
    if (op->is("func.func")) {
      if (func) throw SimError("module holds more than one function");
      func = op.get();
    }
  if (!func) throw SimError("module holds no func.func");
  Evaluator().run_function(*func, data);
}

}  // namespace ukc::sim
