#include "glot/diagnostic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include <nlohmann/json.hpp>

#include "glot/error.hpp"
#include "glot/random.hpp"

namespace glot {

namespace {

std::size_t floor_count(std::size_t len, double ratio) {
  // The epsilon absorbs representation error in products like 100 · 0.29.
  return static_cast<std::size_t>(std::floor(static_cast<double>(len) * ratio + 1e-9));
}

template <class T>
const T& choose(std::span<const T> items, CounterRng& rng) {
  return items[rng.below(items.size())];
}

}  // namespace

std::size_t DiagnosticSpec::distractor_count() const { return floor_count(seq_len, distractor_ratio); }

void DiagnosticSpec::validate() const {
  if (!(distractor_ratio > 0.0 && distractor_ratio < 1.0))
    throw InvalidArgument("diagnostic: distractor ratio must lie in (0, 1)");
  if (seq_len == 0) throw InvalidArgument("diagnostic: seq_len must be >= 1");
  if (templates.empty()) throw InvalidArgument("diagnostic: no signal templates");
  if (distractor_vocab.empty()) throw InvalidArgument("diagnostic: empty distractor vocabulary");
  for (const auto& t : templates) {
    if (t.pattern.empty()) throw InvalidArgument("diagnostic: empty template pattern");
    for (const auto& tok : t.pattern) {
      if (tok.kind == TemplateToken::Kind::slot_x && slot_x_vocab.empty())
        throw InvalidArgument("diagnostic: template uses [X] but slot_x_vocab is empty");
      if (tok.kind == TemplateToken::Kind::slot_y && slot_y_vocab.empty())
        throw InvalidArgument("diagnostic: template uses [Y] but slot_y_vocab is empty");
    }
  }
}

std::size_t DiagnosticVocabulary::vocab_size() const { return 7 + 2 * n_slot_fillers + n_distractors; }

DiagnosticSpec default_diagnostic_spec(const DiagnosticVocabulary& vocab) {
  enum : std::uint32_t { the, file, has, but, not_, and_, both, literal_count };
  using K = TemplateToken::Kind;
  auto lit = [](std::uint32_t id) { return TemplateToken{K::literal, id}; };
  const TemplateToken x{K::slot_x, 0}, y{K::slot_y, 0};

  DiagnosticSpec spec;
  spec.templates = {
      {{lit(the), lit(file), lit(has), x, lit(but), lit(not_), y}, 0},
      {{lit(the), lit(file), lit(has), x, lit(and_), y}, 1},
      {{lit(the), lit(file), lit(has), lit(not_), x, lit(but), y}, 0},
      {{lit(the), lit(file), lit(has), lit(both), x, lit(and_), y}, 1},
  };
  std::uint32_t next = literal_count;
  for (std::size_t i = 0; i < vocab.n_slot_fillers; ++i) spec.slot_x_vocab.push_back(next++);
  for (std::size_t i = 0; i < vocab.n_slot_fillers; ++i) spec.slot_y_vocab.push_back(next++);
  for (std::size_t i = 0; i < vocab.n_distractors; ++i) spec.distractor_vocab.push_back(next++);
  return spec;
}

DiagnosticDataset generate_diagnostic(const DiagnosticSpec& spec) {
  spec.validate();
  const std::size_t n_distract = spec.distractor_count();
  const std::size_t n_signal = spec.seq_len - n_distract;
  const std::span<const std::uint32_t> vocab_d(spec.distractor_vocab);

  DiagnosticDataset ds;
  ds.samples.reserve(spec.n_samples);
  for (std::size_t i = 0; i < spec.n_samples; ++i) {
    CounterRng rng(spec.seed, "diagnostic.sample", i);
    const SignalTemplate& tmpl = choose(std::span<const SignalTemplate>(spec.templates), rng);

    std::vector<std::uint32_t> signal;
    for (const TemplateToken& tok : tmpl.pattern) {
      switch (tok.kind) {
        case TemplateToken::Kind::literal: signal.push_back(tok.id); break;
        case TemplateToken::Kind::slot_x:
          signal.push_back(choose(std::span<const std::uint32_t>(spec.slot_x_vocab), rng));
          break;
        case TemplateToken::Kind::slot_y:
          signal.push_back(choose(std::span<const std::uint32_t>(spec.slot_y_vocab), rng));
          break;
      }
    }
    std::vector<TokenRole> signal_roles(signal.size(), TokenRole::signal);
    if (signal.size() > n_signal) {
      signal.resize(n_signal);
      signal_roles.resize(n_signal);
      ++ds.truncated_templates;
    } else {
      while (signal.size() < n_signal) {
        signal.push_back(choose(vocab_d, rng));
        signal_roles.push_back(TokenRole::signal_padding);
      }
    }

    std::vector<std::uint32_t> distractors(n_distract);
    for (auto& d : distractors) d = choose(vocab_d, rng);
    const auto inject = static_cast<std::size_t>(rng.between(0, static_cast<std::int64_t>(n_distract)));

    DiagnosticSample s;
    s.label = tmpl.label;
    s.injection_pos = inject;
    s.distractor_ratio = spec.distractor_ratio;
    s.tokens.reserve(spec.seq_len);
    s.tokens.insert(s.tokens.end(), distractors.begin(), distractors.begin() + static_cast<std::ptrdiff_t>(inject));
    s.tokens.insert(s.tokens.end(), signal.begin(), signal.end());
    s.tokens.insert(s.tokens.end(), distractors.begin() + static_cast<std::ptrdiff_t>(inject), distractors.end());
    s.roles.assign(inject, TokenRole::distractor);
    s.roles.insert(s.roles.end(), signal_roles.begin(), signal_roles.end());
    s.roles.insert(s.roles.end(), n_distract - inject, TokenRole::distractor);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

// ---------------------------------------------------------------------------

std::vector<std::uint32_t> ToyBackbone::ids_of_class(int c) const {
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < token_class.size(); ++i)
    if (token_class[i] == c) out.push_back(static_cast<std::uint32_t>(i));
  return out;
}

namespace {

std::vector<double> random_unit(std::size_t d, CounterRng& rng) {
  std::vector<double> v(d);
  double sq = 0.0;
  do {
    sq = 0.0;
    for (double& x : v) {
      x = rng.normal();
      sq += x * x;
    }
  } while (sq < 1e-24);
  const double n = std::sqrt(sq);
  for (double& x : v) x /= n;
  return v;
}

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

void normalize(std::vector<double>& v) {
  const double n = std::sqrt(dot(v, v));
  for (double& x : v) x /= n;
}

/// Removes the components of v along the (unit) rows of basis.
void orthogonalize(std::vector<double>& v, const std::vector<std::vector<double>>& basis) {
  for (const auto& b : basis) {
    const double c = dot(v, b);
    for (std::size_t k = 0; k < v.size(); ++k) v[k] -= c * b[k];
  }
}

}  // namespace

ToyBackbone random_backbone(std::size_t vocab_size, std::size_t dim, std::uint64_t seed) {
  if (vocab_size == 0 || dim == 0) throw InvalidArgument("random_backbone: empty table");
  CounterRng rng(seed, "backbone.random");
  Matrix table(vocab_size, dim);
  for (std::size_t t = 0; t < vocab_size; ++t) {
    const auto v = random_unit(dim, rng);
    std::copy(v.begin(), v.end(), table.row(t).begin());
  }
  ToyBackbone b;
  b.table = std::move(table);
  b.token_class.assign(vocab_size, -1);
  return b;
}

GeometryCertificate certify_geometry(const Matrix& table, std::span<const int> token_class,
                                     double tau_lo, double tau_hi) {
  if (token_class.size() != table.rows()) throw InvalidArgument("certify_geometry: class list size");
  GeometryCertificate c;
  c.tau_lo = tau_lo;
  c.tau_hi = tau_hi;
  c.min_signal_cosine = 1.0;
  c.max_signal_distractor_cosine = -1.0;
  c.max_distractor_cosine = -1.0;
  const Matrix s = cosine_similarity_matrix(table);
  for (std::size_t i = 0; i < table.rows(); ++i) {
    for (std::size_t j = i + 1; j < table.rows(); ++j) {
      const bool si = token_class[i] >= 0, sj = token_class[j] >= 0;
      const double v = s(i, j);
      if (si && sj) c.min_signal_cosine = std::min(c.min_signal_cosine, v);
      else if (si || sj) c.max_signal_distractor_cosine = std::max(c.max_signal_distractor_cosine, v);
      else c.max_distractor_cosine = std::max(c.max_distractor_cosine, v);
    }
  }
  return c;
}

ToyBackbone build_planted_geometry(const PlantedGeometryConfig& cfg) {
  if (!(cfg.tau_lo < cfg.tau_hi)) throw InvalidArgument("planted geometry: need tau_lo < tau_hi");
  if (cfg.n_classes == 0 || cfg.n_signal < cfg.n_classes)
    throw InvalidArgument("planted geometry: need at least one signal token per class");
  if (cfg.dim < cfg.n_classes + 1)
    throw InvalidArgument("planted geometry: infeasible, dim must exceed the number of classes");
  if (!(cfg.class_cosine > 0.0 && cfg.class_cosine <= 1.0))
    throw InvalidArgument("planted geometry: class_cosine must lie in (0, 1]");

  CounterRng rng(cfg.seed, "backbone.planted");
  const std::size_t d = cfg.dim;

  // Shared direction plus one orthogonal direction per class.
  std::vector<std::vector<double>> basis{random_unit(d, rng)};
  for (std::size_t k = 0; k < cfg.n_classes; ++k) {
    auto e = random_unit(d, rng);
    orthogonalize(e, basis);
    normalize(e);
    basis.push_back(std::move(e));
  }
  const double shared = std::sqrt(cfg.class_cosine);
  const double own = std::sqrt(1.0 - cfg.class_cosine);

  const std::size_t vocab = cfg.n_signal + cfg.n_distractor;
  Matrix table(vocab, d);
  std::vector<int> token_class(vocab, -1);
  const std::size_t per_class = cfg.n_signal / cfg.n_classes;
  for (std::size_t t = 0; t < cfg.n_signal; ++t) {
    const std::size_t k = std::min(t / std::max<std::size_t>(per_class, 1), cfg.n_classes - 1);
    token_class[t] = static_cast<int>(k);
    const auto noise = random_unit(d, rng);
    std::vector<double> v(d);
    for (std::size_t c = 0; c < d; ++c)
      v[c] = shared * basis[0][c] + own * basis[k + 1][c] + cfg.perturbation * noise[c];
    normalize(v);
    std::copy(v.begin(), v.end(), table.row(t).begin());
  }

  for (std::size_t t = cfg.n_signal; t < vocab; ++t) {
    bool placed = false;
    for (std::size_t attempt = 0; attempt < cfg.max_retries && !placed; ++attempt) {
      const auto v = random_unit(d, rng);
      placed = true;
      for (std::size_t u = 0; u < t && placed; ++u) placed = dot(v, table.row(u)) < cfg.tau_lo;
      if (placed) std::copy(v.begin(), v.end(), table.row(t).begin());
    }
    if (!placed) {
      throw InvalidArgument("planted geometry: rejection sampling exhausted " +
                            std::to_string(cfg.max_retries) + " retries at distractor " +
                            std::to_string(t - cfg.n_signal) +
                            "; increase dim, raise tau_lo, or reduce n_distractor");
    }
  }

  ToyBackbone b;
  b.certificate = certify_geometry(table, token_class, cfg.tau_lo, cfg.tau_hi);
  if (!b.certificate.holds()) {
    throw InvalidArgument("planted geometry: certificate failed (min signal cosine " +
                          std::to_string(b.certificate.min_signal_cosine) + ", tau_hi " +
                          std::to_string(cfg.tau_hi) +
                          "); raise class_cosine or lower perturbation");
  }
  b.table = std::move(table);
  b.token_class = std::move(token_class);
  b.planted = cfg;
  return b;
}

Matrix embed(std::span<const std::uint32_t> ids, const ToyBackbone& backbone) {
  std::vector<std::size_t> rows(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= backbone.vocab_size())
      throw DataError("embed: token id " + std::to_string(ids[i]) + " outside vocabulary of " +
                      std::to_string(backbone.vocab_size()));
    rows[i] = ids[i];
  }
  return backbone.table.gather_rows(rows);
}

std::size_t RelationalXorSpec::distractor_count() const { return floor_count(seq_len, distractor_ratio); }

DiagnosticDataset generate_relational_xor(const RelationalXorSpec& spec, const ToyBackbone& backbone,
                                          std::vector<XorCase>* cases_out) {
  if (!(spec.distractor_ratio > 0.0 && spec.distractor_ratio < 1.0))
    throw InvalidArgument("relational xor: distractor ratio must lie in (0, 1)");
  const auto a_ids = backbone.ids_of_class(0);
  const auto b_ids = backbone.ids_of_class(1);
  const auto d_ids = backbone.ids_of_class(-1);
  if (a_ids.empty() || b_ids.empty())
    throw InvalidArgument("relational xor: backbone needs signal classes 0 and 1");
  const std::size_t n_distract = spec.distractor_count();
  const std::size_t block = spec.seq_len - n_distract;
  if (block < 2 * spec.tokens_per_class)
    throw InvalidArgument("relational xor: signal block of " + std::to_string(block) +
                          " tokens cannot hold both classes");
  if (d_ids.size() < spec.seq_len)
    throw InvalidArgument("relational xor: need at least seq_len distinct distractor ids");

  DiagnosticDataset ds;
  ds.samples.reserve(spec.n_samples);
  if (cases_out) cases_out->clear();
  std::vector<std::uint32_t> pool;
  for (std::size_t i = 0; i < spec.n_samples; ++i) {
    CounterRng rng(spec.seed, "xor.sample", i);
    const auto c = static_cast<XorCase>(rng.below(4));
    const bool has_a = c == XorCase::a_only || c == XorCase::both;
    const bool has_b = c == XorCase::b_only || c == XorCase::both;

    std::vector<std::uint32_t> sig;
    std::vector<TokenRole> sig_roles;
    for (std::size_t k = 0; k < spec.tokens_per_class; ++k) {
      if (has_a) sig.push_back(a_ids[rng.below(a_ids.size())]);
      if (has_b) sig.push_back(b_ids[rng.below(b_ids.size())]);
    }
    sig_roles.assign(sig.size(), TokenRole::signal);

    // Distinct distractors: partial Fisher-Yates over the pool.
    pool = d_ids;
    const std::size_t n_fill = n_distract + (block - sig.size());
    for (std::size_t k = 0; k < n_fill; ++k) std::swap(pool[k], pool[k + rng.below(pool.size() - k)]);
    std::size_t next = 0;
    while (sig.size() < block) {
      sig.push_back(pool[next++]);
      sig_roles.push_back(TokenRole::signal_padding);
    }
    for (std::size_t k = block; k-- > 1;) {
      const std::size_t j = rng.below(k + 1);
      std::swap(sig[k], sig[j]);
      std::swap(sig_roles[k], sig_roles[j]);
    }
    const auto inject = static_cast<std::size_t>(rng.between(0, static_cast<std::int64_t>(n_distract)));

    DiagnosticSample s;
    s.label = (has_a != has_b) ? 1 : 0;
    s.injection_pos = inject;
    s.distractor_ratio = spec.distractor_ratio;
    s.tokens.assign(pool.begin() + static_cast<std::ptrdiff_t>(next),
                    pool.begin() + static_cast<std::ptrdiff_t>(next + inject));
    s.tokens.insert(s.tokens.end(), sig.begin(), sig.end());
    s.tokens.insert(s.tokens.end(), pool.begin() + static_cast<std::ptrdiff_t>(next + inject),
                    pool.begin() + static_cast<std::ptrdiff_t>(next + n_distract));
    s.roles.assign(inject, TokenRole::distractor);
    s.roles.insert(s.roles.end(), sig_roles.begin(), sig_roles.end());
    s.roles.insert(s.roles.end(), n_distract - inject, TokenRole::distractor);
    ds.samples.push_back(std::move(s));
    if (cases_out) cases_out->push_back(c);
  }
  return ds;
}

void write_diagnostic_jsonl(const DiagnosticDataset& ds, std::ostream& os) {
  for (const auto& s : ds.samples) {
    nlohmann::ordered_json line;
    line["tokens"] = s.tokens;
    line["label"] = s.label;
    line["meta"] = {{"injection_pos", s.injection_pos}, {"d_r", s.distractor_ratio}};
    os << line.dump() << '\n';
  }
}

void write_diagnostic_jsonl(const DiagnosticDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write_diagnostic_jsonl(ds, out);
}

LabeledDataset to_labeled_dataset(const DiagnosticDataset& ds) {
  LabeledDataset out;
  out.task = TaskKind::single;
  out.items.reserve(ds.samples.size());
  for (const auto& s : ds.samples) {
    DatasetItem item;
    item.tokens = {s.tokens};
    item.label = s.label;
    out.items.push_back(std::move(item));
  }
  return out;
}

}  // namespace glot
