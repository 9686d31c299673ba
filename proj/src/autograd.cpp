#include "glot/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "glot/error.hpp"

namespace glot {

Parameter::Parameter(std::string name_, Matrix init)
    : name(std::move(name_)),
      value(std::move(init)),
      grad(value.rows(), value.cols()),
      adam_m(value.rows(), value.cols()),
      adam_v(value.rows(), value.cols()) {}

const Matrix& Var::value() const {
  if (!tape_) throw InvalidArgument("Var: empty handle");
  return tape_->value(id_);
}

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.op = "constant";
  n.leaf = true;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Parameter& p) {
  Node n;
  n.value = p.value;
  n.param = &p;
  n.op = "param:" + p.name;
  n.leaf = true;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::string_view op, std::initializer_list<Var> inputs,
                 BackwardFn backward) {
  return record(std::move(value), op, std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(backward));
}

Var Tape::record(Matrix value, std::string_view op, std::span<const Var> inputs,
                 BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  n.op = std::string(op);
  for (const Var& in : inputs) {
    if (in.tape() != this) throw InvalidArgument("Tape: input recorded on another tape");
    n.requires_grad = n.requires_grad || nodes_[in.id()].requires_grad;
  }
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Matrix& Tape::grad_slot(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && !n.value.empty()) n.grad = Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw InvalidArgument("backward: loss is not on this tape");
  if (loss.rows() != 1 || loss.cols() != 1) throw InvalidArgument("backward: loss must be 1x1");
  for (auto& n : nodes_) n.grad = Matrix();
  grad_slot(loss.id())(0, 0) = 1.0;

  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.leaf) {
      if (n.param) {
        if (!n.param->grad.same_shape(n.grad)) n.param->grad = Matrix(n.grad.rows(), n.grad.cols());
        add_inplace(n.param->grad, n.grad);
      }
      continue;
    }
    if (!n.backward) {
      throw Error("backward: op '" + n.op + "' has no gradient rule");
    }
    n.backward(*this, id);
  }
}

namespace ad {

namespace {

void accumulate(Tape& t, std::size_t id, const Matrix& delta) {
  if (t.requires_grad(id)) add_inplace(t.grad_slot(id), delta);
}

void require_same_tape(Var a, Var b) {
  if (a.tape() != b.tape() || !a.tape()) throw InvalidArgument("ad: inputs on different tapes");
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (!a.value().same_shape(b.value())) {
    throw InvalidArgument(std::string(op) + ": shape mismatch");
  }
}

template <class F>
Var unary_map(Var a, const char* op, F&& f, Tape::BackwardFn bw) {
  Matrix out = a.value();
  for (double& v : out.data()) v = f(v);
  return a.tape()->record(std::move(out), op, {a}, std::move(bw));
}

}  // namespace

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  Matrix out = glot::matmul(a.value(), b.value());
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape()->record(std::move(out), "matmul", {a, b}, [ai, bi](Tape& t, std::size_t self) {
    const Matrix& gout = t.grad_slot(self);
    if (t.requires_grad(ai)) matmul_nt_accumulate(gout, t.value(bi), t.grad_slot(ai));
    if (t.requires_grad(bi)) matmul_tn_accumulate(t.value(ai), gout, t.grad_slot(bi));
  });
}

Var add(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape(a, b, "add");
  Matrix out = a.value();
  add_inplace(out, b.value());
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape()->record(std::move(out), "add", {a, b}, [ai, bi](Tape& t, std::size_t self) {
    const Matrix& g = t.grad_slot(self);
    accumulate(t, ai, g);
    accumulate(t, bi, g);
  });
}

Var sub(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape(a, b, "sub");
  Matrix out = a.value();
  axpy_inplace(out, -1.0, b.value());
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape()->record(std::move(out), "sub", {a, b}, [ai, bi](Tape& t, std::size_t self) {
    const Matrix& g = t.grad_slot(self);
    accumulate(t, ai, g);
    if (t.requires_grad(bi)) axpy_inplace(t.grad_slot(bi), -1.0, g);
  });
}

Var add_row(Var a, Var bias) {
  require_same_tape(a, bias);
  if (bias.rows() != 1 || bias.cols() != a.cols()) throw InvalidArgument("add_row: bias shape");
  Matrix out = a.value();
  const auto bv = bias.value().row(0);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bv[c];
  }
  const std::size_t ai = a.id(), bi = bias.id();
  return a.tape()->record(std::move(out), "add_row", {a, bias},
                          [ai, bi](Tape& t, std::size_t self) {
                            const Matrix& g = t.grad_slot(self);
                            accumulate(t, ai, g);
                            if (t.requires_grad(bi)) {
                              Matrix& gb = t.grad_slot(bi);
                              for (std::size_t r = 0; r < g.rows(); ++r)
                                for (std::size_t c = 0; c < g.cols(); ++c) gb(0, c) += g(r, c);
                            }
                          });
}

Var scale(Var a, double alpha) {
  Matrix out = a.value();
  for (double& v : out.data()) v *= alpha;
  const std::size_t ai = a.id();
  return a.tape()->record(std::move(out), "scale", {a}, [ai, alpha](Tape& t, std::size_t self) {
    if (t.requires_grad(ai)) axpy_inplace(t.grad_slot(ai), alpha, t.grad_slot(self));
  });
}

Var scale_by(Var a, Var s) {
  require_same_tape(a, s);
  if (s.rows() != 1 || s.cols() != 1) throw InvalidArgument("scale_by: scalar must be 1x1");
  const double sv = s.value()(0, 0);
  Matrix out = a.value();
  for (double& v : out.data()) v *= sv;
  const std::size_t ai = a.id(), si = s.id();
  return a.tape()->record(std::move(out), "scale_by", {a, s}, [ai, si](Tape& t, std::size_t self) {
    const Matrix& g = t.grad_slot(self);
    if (t.requires_grad(ai)) axpy_inplace(t.grad_slot(ai), t.value(si)(0, 0), g);
    if (t.requires_grad(si)) {
      double acc = 0.0;
      const auto av = t.value(ai).data();
      const auto gv = g.data();
      for (std::size_t i = 0; i < gv.size(); ++i) acc += gv[i] * av[i];
      t.grad_slot(si)(0, 0) += acc;
    }
  });
}

Var hadamard(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape(a, b, "hadamard");
  Matrix out = a.value();
  const auto bv = b.value().data();
  auto ov = out.data();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] *= bv[i];
  const std::size_t ai = a.id(), bi = b.id();
  return a.tape()->record(std::move(out), "hadamard", {a, b}, [ai, bi](Tape& t, std::size_t self) {
    const auto g = t.grad_slot(self).data();
    if (t.requires_grad(ai)) {
      auto ga = t.grad_slot(ai).data();
      const auto bv2 = t.value(bi).data();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv2[i];
    }
    if (t.requires_grad(bi)) {
      auto gb = t.grad_slot(bi).data();
      const auto av = t.value(ai).data();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var scale_rows(Var a, Var w) {
  require_same_tape(a, w);
  if (w.cols() != 1 || w.rows() != a.rows()) throw InvalidArgument("scale_rows: weight shape");
  Matrix out = a.value();
  const Matrix& wv = w.value();
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (double& v : out.row(r)) v *= wv(r, 0);
  const std::size_t ai = a.id(), wi = w.id();
  return a.tape()->record(std::move(out), "scale_rows", {a, w}, [ai, wi](Tape& t, std::size_t self) {
    const Matrix& g = t.grad_slot(self);
    const Matrix& wv2 = t.value(wi);
    if (t.requires_grad(ai)) {
      Matrix& ga = t.grad_slot(ai);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        const double s = wv2(r, 0);
        auto gr = g.row(r);
        auto gar = ga.row(r);
        for (std::size_t c = 0; c < gr.size(); ++c) gar[c] += s * gr[c];
      }
    }
    if (t.requires_grad(wi)) {
      Matrix& gw = t.grad_slot(wi);
      const Matrix& av = t.value(ai);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        double acc = 0.0;
        auto gr = g.row(r);
        auto ar = av.row(r);
        for (std::size_t c = 0; c < gr.size(); ++c) acc += gr[c] * ar[c];
        gw(r, 0) += acc;
      }
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw InvalidArgument("concat_cols: no inputs");
  std::vector<Matrix> values;
  std::vector<std::size_t> ids, widths;
  for (const Var& p : parts) {
    require_same_tape(parts.front(), p);
    values.push_back(p.value());
    ids.push_back(p.id());
    widths.push_back(p.cols());
  }
  Matrix out = hconcat(values);
  return parts.front().tape()->record(
      std::move(out), "concat_cols", parts, [ids, widths](Tape& t, std::size_t self) {
        const Matrix& g = t.grad_slot(self);
        std::size_t offset = 0;
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (t.requires_grad(ids[k])) {
            Matrix& gk = t.grad_slot(ids[k]);
            for (std::size_t r = 0; r < g.rows(); ++r)
              for (std::size_t c = 0; c < widths[k]; ++c) gk(r, c) += g(r, offset + c);
          }
          offset += widths[k];
        }
      });
}

Var slice_rows(Var a, std::size_t begin, std::size_t count) {
  Matrix out = a.value().row_block(begin, count);
  const std::size_t ai = a.id();
  return a.tape()->record(std::move(out), "slice_rows", {a},
                          [ai, begin, count](Tape& t, std::size_t self) {
                            if (!t.requires_grad(ai)) return;
                            const Matrix& g = t.grad_slot(self);
                            Matrix& ga = t.grad_slot(ai);
                            for (std::size_t r = 0; r < count; ++r)
                              for (std::size_t c = 0; c < g.cols(); ++c) ga(begin + r, c) += g(r, c);
                          });
}

Var transpose(Var a) {
  Matrix out = a.value().transpose();
  const std::size_t ai = a.id();
  return a.tape()->record(std::move(out), "transpose", {a}, [ai](Tape& t, std::size_t self) {
    if (t.requires_grad(ai)) add_inplace(t.grad_slot(ai), t.grad_slot(self).transpose());
  });
}

Var tanh(Var a) {
  const std::size_t ai = a.id();
  return unary_map(a, "tanh", [](double v) { return std::tanh(v); },
                   [ai](Tape& t, std::size_t self) {
                     if (!t.requires_grad(ai)) return;
                     const auto y = t.value(self).data();
                     const auto g = t.grad_slot(self).data();
                     auto ga = t.grad_slot(ai).data();
                     for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
                   });
}

Var relu(Var a) {
  const std::size_t ai = a.id();
  return unary_map(a, "relu", [](double v) { return v > 0.0 ? v : 0.0; },
                   [ai](Tape& t, std::size_t self) {
                     if (!t.requires_grad(ai)) return;
                     const auto x = t.value(ai).data();
                     const auto g = t.grad_slot(self).data();
                     auto ga = t.grad_slot(ai).data();
                     for (std::size_t i = 0; i < g.size(); ++i)
                       if (x[i] > 0.0) ga[i] += g[i];
                   });
}

Var leaky_relu(Var a, double slope) {
  const std::size_t ai = a.id();
  return unary_map(a, "leaky_relu", [slope](double v) { return v > 0.0 ? v : slope * v; },
                   [ai, slope](Tape& t, std::size_t self) {
                     if (!t.requires_grad(ai)) return;
                     const auto x = t.value(ai).data();
                     const auto g = t.grad_slot(self).data();
                     auto ga = t.grad_slot(ai).data();
                     for (std::size_t i = 0; i < g.size(); ++i)
                       ga[i] += x[i] > 0.0 ? g[i] : slope * g[i];
                   });
}

Var log_clamped(Var a, double floor) {
  const std::size_t ai = a.id();
  return unary_map(a, "log_clamped", [floor](double v) { return std::log(std::max(v, floor)); },
                   [ai, floor](Tape& t, std::size_t self) {
                     if (!t.requires_grad(ai)) return;
                     const auto x = t.value(ai).data();
                     const auto g = t.grad_slot(self).data();
                     auto ga = t.grad_slot(ai).data();
                     for (std::size_t i = 0; i < g.size(); ++i)
                       if (x[i] > floor) ga[i] += g[i] / x[i];
                   });
}

Var row_softmax(Var a) {
  Matrix out = glot::row_softmax(a.value());
  const std::size_t ai = a.id();
  return a.tape()->record(std::move(out), "row_softmax", {a}, [ai](Tape& t, std::size_t self) {
    if (!t.requires_grad(ai)) return;
    const Matrix& y = t.value(self);
    const Matrix& g = t.grad_slot(self);
    Matrix& ga = t.grad_slot(ai);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
      for (std::size_t c = 0; c < y.cols(); ++c) ga(r, c) += y(r, c) * (g(r, c) - dot);
    }
  });
}

Var pick(Var a, std::vector<std::size_t> index) {
  const Matrix& av = a.value();
  if (index.size() != av.rows()) throw InvalidArgument("pick: one index per row required");
  Matrix out(av.rows(), 1);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    if (index[r] >= av.cols()) throw InvalidArgument("pick: column index out of range");
    out(r, 0) = av(r, index[r]);
  }
  const std::size_t ai = a.id();
  return a.tape()->record(std::move(out), "pick", {a},
                          [ai, index = std::move(index)](Tape& t, std::size_t self) {
                            if (!t.requires_grad(ai)) return;
                            const Matrix& g = t.grad_slot(self);
                            Matrix& ga = t.grad_slot(ai);
                            for (std::size_t r = 0; r < index.size(); ++r) ga(r, index[r]) += g(r, 0);
                          });
}

Var gather_rows(Var a, std::vector<std::size_t> index) {
  Matrix out = a.value().gather_rows(index);
  const std::size_t ai = a.id();
  return a.tape()->record(std::move(out), "gather_rows", {a},
                          [ai, index = std::move(index)](Tape& t, std::size_t self) {
                            if (!t.requires_grad(ai)) return;
                            const Matrix& g = t.grad_slot(self);
                            Matrix& ga = t.grad_slot(ai);
                            for (std::size_t i = 0; i < index.size(); ++i) {
                              auto src = g.row(i);
                              auto dst = ga.row(index[i]);
                              for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
                            }
                          });
}

Var scatter_add_rows(Var a, std::vector<std::size_t> index, std::size_t out_rows) {
  const Matrix& av = a.value();
  if (index.size() != av.rows()) throw InvalidArgument("scatter_add_rows: one index per row");
  Matrix out(out_rows, av.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= out_rows) throw InvalidArgument("scatter_add_rows: index out of range");
    auto src = av.row(i);
    auto dst = out.row(index[i]);
    for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
  }
  const std::size_t ai = a.id();
  return a.tape()->record(std::move(out), "scatter_add_rows", {a},
                          [ai, index = std::move(index)](Tape& t, std::size_t self) {
                            if (!t.requires_grad(ai)) return;
                            const Matrix& g = t.grad_slot(self);
                            Matrix& ga = t.grad_slot(ai);
                            for (std::size_t i = 0; i < index.size(); ++i) {
                              auto src = g.row(index[i]);
                              auto dst = ga.row(i);
                              for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
                            }
                          });
}

Var segment_softmax(Var a, std::vector<std::size_t> segment, std::size_t segments) {
  const Matrix& av = a.value();
  if (av.cols() != 1 || segment.size() != av.rows()) {
    throw InvalidArgument("segment_softmax: expects an n×1 column and one segment id per row");
  }
  std::vector<double> mx(segments, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < segment.size(); ++i) {
    if (segment[i] >= segments) throw InvalidArgument("segment_softmax: segment id out of range");
    mx[segment[i]] = std::max(mx[segment[i]], av(i, 0));
  }
  std::vector<double> sum(segments, 0.0);
  Matrix out(av.rows(), 1);
  for (std::size_t i = 0; i < segment.size(); ++i) {
    out(i, 0) = std::exp(av(i, 0) - mx[segment[i]]);
    sum[segment[i]] += out(i, 0);
  }
  for (std::size_t i = 0; i < segment.size(); ++i) out(i, 0) /= sum[segment[i]];
  const std::size_t ai = a.id();
  return a.tape()->record(
      std::move(out), "segment_softmax", {a},
      [ai, segment = std::move(segment), segments](Tape& t, std::size_t self) {
        if (!t.requires_grad(ai)) return;
        const Matrix& y = t.value(self);
        const Matrix& g = t.grad_slot(self);
        std::vector<double> dot(segments, 0.0);
        for (std::size_t i = 0; i < segment.size(); ++i) dot[segment[i]] += g(i, 0) * y(i, 0);
        Matrix& ga = t.grad_slot(ai);
        for (std::size_t i = 0; i < segment.size(); ++i)
          ga(i, 0) += y(i, 0) * (g(i, 0) - dot[segment[i]]);
      });
}

Var segment_mean_rows(Var a, std::vector<std::size_t> segment, std::size_t segments) {
  const Matrix& av = a.value();
  if (segment.size() != av.rows()) throw InvalidArgument("segment_mean_rows: one id per row");
  std::vector<double> count(segments, 0.0);
  for (std::size_t s : segment) {
    if (s >= segments) throw InvalidArgument("segment_mean_rows: segment id out of range");
    count[s] += 1.0;
  }
  for (double c : count)
    if (c == 0.0) throw InvalidArgument("segment_mean_rows: empty segment");
  Matrix out(segments, av.cols());
  for (std::size_t i = 0; i < segment.size(); ++i) {
    auto src = av.row(i);
    auto dst = out.row(segment[i]);
    for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
  }
  for (std::size_t s = 0; s < segments; ++s)
    for (double& v : out.row(s)) v /= count[s];
  const std::size_t ai = a.id();
  return a.tape()->record(
      std::move(out), "segment_mean_rows", {a},
      [ai, segment = std::move(segment), count = std::move(count)](Tape& t, std::size_t self) {
        if (!t.requires_grad(ai)) return;
        const Matrix& g = t.grad_slot(self);
        Matrix& ga = t.grad_slot(ai);
        for (std::size_t i = 0; i < segment.size(); ++i) {
          const double inv = 1.0 / count[segment[i]];
          auto src = g.row(segment[i]);
          auto dst = ga.row(i);
          for (std::size_t c = 0; c < src.size(); ++c) dst[c] += inv * src[c];
        }
      });
}

Var segment_max_rows(Var a, std::vector<std::size_t> segment, std::size_t segments) {
  const Matrix& av = a.value();
  if (segment.size() != av.rows()) throw InvalidArgument("segment_max_rows: one id per row");
  const std::size_t cols = av.cols();
  constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> arg(segments * cols, none);
  Matrix out(segments, cols);
  for (std::size_t i = 0; i < segment.size(); ++i) {
    const std::size_t s = segment[i];
    if (s >= segments) throw InvalidArgument("segment_max_rows: segment id out of range");
    for (std::size_t c = 0; c < cols; ++c) {
      std::size_t& best = arg[s * cols + c];
      if (best == none || av(i, c) > av(best, c)) best = i;
    }
  }
  for (std::size_t s = 0; s < segments; ++s)
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t best = arg[s * cols + c];
      if (best == none) throw InvalidArgument("segment_max_rows: empty segment");
      out(s, c) = av(best, c);
    }
  const std::size_t ai = a.id();
  return a.tape()->record(std::move(out), "segment_max_rows", {a},
                          [ai, arg = std::move(arg), cols](Tape& t, std::size_t self) {
                            if (!t.requires_grad(ai)) return;
                            const Matrix& g = t.grad_slot(self);
                            Matrix& ga = t.grad_slot(ai);
                            for (std::size_t k = 0; k < arg.size(); ++k)
                              ga(arg[k], k % cols) += g(k / cols, k % cols);
                          });
}

Var max_elementwise(std::span<const Var> parts) {
  if (parts.empty()) throw InvalidArgument("max_elementwise: no inputs");
  Matrix out = parts.front().value();
  std::vector<std::uint32_t> winner(out.size(), 0);
  std::vector<std::size_t> ids{parts.front().id()};
  for (std::size_t k = 1; k < parts.size(); ++k) {
    require_same_tape(parts.front(), parts[k]);
    require_same_shape(parts.front(), parts[k], "max_elementwise");
    ids.push_back(parts[k].id());
    const auto v = parts[k].value().data();
    auto o = out.data();
    for (std::size_t i = 0; i < o.size(); ++i) {
      if (v[i] > o[i]) {
        o[i] = v[i];
        winner[i] = static_cast<std::uint32_t>(k);
      }
    }
  }
  return parts.front().tape()->record(
      std::move(out), "max_elementwise", parts,
      [ids, winner = std::move(winner)](Tape& t, std::size_t self) {
        const auto g = t.grad_slot(self).data();
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (!t.requires_grad(ids[k])) continue;
          auto gk = t.grad_slot(ids[k]).data();
          for (std::size_t i = 0; i < g.size(); ++i)
            if (winner[i] == k) gk[i] += g[i];
        }
      });
}

Var normalize_rows(Var a) {
  Matrix out = a.value();
  std::vector<double> norms(out.rows(), 0.0);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    double sq = 0.0;
    for (double v : out.row(r)) sq += v * v;
    const double n = std::sqrt(sq);
    norms[r] = n;
    for (double& v : out.row(r)) v = n < 1e-12 ? 0.0 : v / n;
  }
  const std::size_t ai = a.id();
  return a.tape()->record(std::move(out), "normalize_rows", {a},
                          [ai, norms = std::move(norms)](Tape& t, std::size_t self) {
                            if (!t.requires_grad(ai)) return;
                            const Matrix& y = t.value(self);
                            const Matrix& g = t.grad_slot(self);
                            Matrix& ga = t.grad_slot(ai);
                            for (std::size_t r = 0; r < y.rows(); ++r) {
                              if (norms[r] < 1e-12) continue;
                              double dot = 0.0;
                              for (std::size_t c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
                              for (std::size_t c = 0; c < y.cols(); ++c)
                                ga(r, c) += (g(r, c) - y(r, c) * dot) / norms[r];
                            }
                          });
}

Var sum_all(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const std::size_t ai = a.id();
  return a.tape()->record(Matrix(1, 1, s), "sum_all", {a}, [ai](Tape& t, std::size_t self) {
    if (!t.requires_grad(ai)) return;
    const double g = t.grad_slot(self)(0, 0);
    for (double& v : t.grad_slot(ai).data()) v += g;
  });
}

Var mean_all(Var a) {
  const double n = static_cast<double>(a.value().size());
  if (n == 0.0) throw InvalidArgument("mean_all: empty input");
  return scale(sum_all(a), 1.0 / n);
}

}  // namespace ad

}  // namespace glot
