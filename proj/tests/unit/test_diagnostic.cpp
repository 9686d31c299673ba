#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "glot/diagnostic.hpp"
#include "glot/error.hpp"
#include "glot/graph.hpp"

using namespace glot;

namespace {

std::size_t count_role(const DiagnosticSample& s, TokenRole r) {
  return static_cast<std::size_t>(std::count(s.roles.begin(), s.roles.end(), r));
}

DiagnosticSpec small_spec(std::size_t n, std::size_t len, double ratio) {
  DiagnosticSpec s = default_diagnostic_spec();
  s.n_samples = n;
  s.seq_len = len;
  s.distractor_ratio = ratio;
  return s;
}

const ToyBackbone& planted() {
  static const ToyBackbone b = build_planted_geometry(PlantedGeometryConfig{});
  return b;
}

}  // namespace

TEST_CASE("spec counts follow the floor law") {
  DiagnosticSpec s = default_diagnostic_spec();
  CHECK(s.seq_len == 256);
  CHECK(s.distractor_ratio == 0.9);
  CHECK(s.n_samples == 10000);
  CHECK(s.distractor_count() == 230);
  CHECK(s.signal_length() == 26);
  s.distractor_ratio = 0.2;
  CHECK(s.distractor_count() == 51);
  s.distractor_ratio = 0.5;
  CHECK(s.distractor_count() == 128);
  s.seq_len = 10;
  s.distractor_ratio = 0.7;
  CHECK(s.distractor_count() == 7);
}

TEST_CASE("spec validation") {
  DiagnosticSpec s = default_diagnostic_spec();
  for (double bad : {0.0, 1.0, -0.1, 1.5}) {
    s.distractor_ratio = bad;
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
  }
  s = default_diagnostic_spec();
  s.templates.clear();
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  s = default_diagnostic_spec();
  s.distractor_vocab.clear();
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  s = default_diagnostic_spec();
  s.slot_x_vocab.clear();
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
}

TEST_CASE("default templates are balanced and use disjoint ids") {
  const DiagnosticVocabulary vocab;
  const DiagnosticSpec s = default_diagnostic_spec(vocab);
  CHECK(s.templates.size() == 4);
  int ones = 0;
  for (const auto& t : s.templates) ones += t.label;
  CHECK(ones == 2);
  std::set<std::uint32_t> d(s.distractor_vocab.begin(), s.distractor_vocab.end());
  CHECK(d.size() == vocab.n_distractors);
  for (auto id : s.slot_x_vocab) CHECK(!d.count(id));
  for (auto id : s.slot_y_vocab) CHECK(!d.count(id));
  CHECK(*d.rbegin() + 1 == vocab.vocab_size());
}

TEST_CASE("every sample has the exact category counts") {
  for (double ratio : {0.2, 0.5, 0.8, 0.9}) {
    const DiagnosticSpec s = small_spec(500, 64, ratio);
    const DiagnosticDataset ds = generate_diagnostic(s);
    REQUIRE(ds.samples.size() == 500);
    std::size_t distractors = 0, total = 0;
    for (const auto& smp : ds.samples) {
      CHECK(smp.tokens.size() == 64);
      CHECK(smp.roles.size() == 64);
      CHECK(count_role(smp, TokenRole::distractor) == s.distractor_count());
      CHECK(count_role(smp, TokenRole::signal) + count_role(smp, TokenRole::signal_padding) == s.signal_length());
      CHECK(smp.injection_pos <= s.distractor_count());
      // The signal block is contiguous and starts at the injection point.
      for (std::size_t i = 0; i < s.signal_length(); ++i)
        CHECK(smp.roles[smp.injection_pos + i] != TokenRole::distractor);
      CHECK(smp.distractor_ratio == ratio);
      distractors += count_role(smp, TokenRole::distractor);
      total += smp.tokens.size();
    }
    CHECK(static_cast<double>(distractors) / total == static_cast<double>(s.distractor_count()) / 64);
  }
}

TEST_CASE("distractors come from the distractor vocab, with replacement") {
  const DiagnosticSpec s = small_spec(200, 256, 0.9);
  const std::set<std::uint32_t> vocab(s.distractor_vocab.begin(), s.distractor_vocab.end());
  bool repeated = false;
  for (const auto& smp : generate_diagnostic(s).samples) {
    std::set<std::uint32_t> seen;
    for (std::size_t i = 0; i < smp.tokens.size(); ++i)
      if (smp.roles[i] != TokenRole::signal) {
        CHECK(vocab.count(smp.tokens[i]));
        if (!seen.insert(smp.tokens[i]).second) repeated = true;
      }
  }
  // 5000 ids, 230 draws per sample: birthday collisions are near certain over 200 samples.
  CHECK(repeated);
}

TEST_CASE("no-distractor limit and truncation") {
  SUBCASE("tiny ratio on a template-sized sequence") {
    DiagnosticSpec s = small_spec(50, 5, 0.01);
    s.templates = {{{{TemplateToken::Kind::literal, 0}, {TemplateToken::Kind::literal, 1},
                     {TemplateToken::Kind::slot_x, 0}, {TemplateToken::Kind::literal, 2},
                     {TemplateToken::Kind::slot_y, 0}},
                    1}};
    const DiagnosticDataset ds = generate_diagnostic(s);
    for (const auto& smp : ds.samples) {
      CHECK(smp.injection_pos == 0);
      CHECK(count_role(smp, TokenRole::signal) == 5);
      CHECK(smp.tokens[0] == 0);
      CHECK(smp.tokens[1] == 1);
      CHECK(smp.tokens[3] == 2);
      CHECK(smp.label == 1);
    }
    CHECK(ds.truncated_templates == 0);
  }
  SUBCASE("template longer than the signal block") {
    const DiagnosticSpec s = small_spec(40, 10, 0.9);
    const DiagnosticDataset ds = generate_diagnostic(s);
    CHECK(ds.truncated_templates == 40);
    for (const auto& smp : ds.samples) CHECK(smp.tokens.size() == 10);
  }
}

TEST_CASE("generation is deterministic per seed") {
  const DiagnosticSpec s = small_spec(100, 64, 0.8);
  std::ostringstream a, b, c;
  write_diagnostic_jsonl(generate_diagnostic(s), a);
  write_diagnostic_jsonl(generate_diagnostic(s), b);
  DiagnosticSpec other = s;
  other.seed = 7;
  write_diagnostic_jsonl(generate_diagnostic(other), c);
  CHECK(a.str() == b.str());
  CHECK(a.str() != c.str());
}

TEST_CASE("jsonl records") {
  const DiagnosticSpec s = small_spec(3, 20, 0.5);
  const DiagnosticDataset ds = generate_diagnostic(s);
  std::ostringstream os;
  write_diagnostic_jsonl(ds, os);
  std::istringstream in(os.str());
  std::string line;
  std::size_t i = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("tokens").get<std::vector<std::uint32_t>>() == ds.samples[i].tokens);
    CHECK(j.at("label").get<int>() == ds.samples[i].label);
    CHECK(j.at("meta").at("injection_pos").get<std::size_t>() == ds.samples[i].injection_pos);
    CHECK(j.at("meta").at("d_r").get<double>() == 0.5);
    ++i;
  }
  CHECK(i == 3);
  CHECK(os.str().rfind("{\"tokens\":", 0) == 0);
  const LabeledDataset lab = to_labeled_dataset(ds);
  CHECK(lab.task == TaskKind::single);
  CHECK(lab.items.size() == 3);
  CHECK(lab.items[1].tokens[0] == ds.samples[1].tokens);
}

TEST_CASE("embedding lookup") {
  const ToyBackbone b = random_backbone(10, 4, 3);
  const std::vector<std::uint32_t> ids{3, 3, 7};
  const Matrix e = embed(ids, b);
  CHECK(e.row_block(0, 1) == e.row_block(1, 1));
  CHECK(e.row_block(2, 1) == b.table.row_block(7, 1));
  for (std::size_t r = 0; r < 10; ++r) {
    double sq = 0;
    for (double v : b.table.row(r)) sq += v * v;
    CHECK(sq == doctest::Approx(1.0));
  }
  const std::vector<std::uint32_t> bad{10};
  CHECK_THROWS_AS(embed(bad, b), DataError);

  ToyBackbone onehot;
  onehot.table = Matrix::identity(5);
  onehot.token_class.assign(5, -1);
  const std::vector<std::uint32_t> all{0, 1, 2, 3, 4};
  CHECK(embed(all, onehot) == Matrix::identity(5));
}

TEST_CASE("planted geometry") {
  SUBCASE("defaults pass their own certificate") {
    const ToyBackbone& b = planted();
    CHECK(b.vocab_size() == 8 + 512);
    CHECK(b.dim() == 64);
    CHECK(b.certificate.holds());
    const GeometryCertificate again = certify_geometry(b.table, b.token_class, 0.45, 0.65);
    CHECK(again.min_signal_cosine == b.certificate.min_signal_cosine);
    CHECK(again.max_signal_distractor_cosine == b.certificate.max_signal_distractor_cosine);
    CHECK(b.ids_of_class(0) == std::vector<std::uint32_t>{0, 1, 2, 3});
    CHECK(b.ids_of_class(1) == std::vector<std::uint32_t>{4, 5, 6, 7});
  }
  SUBCASE("brute-force cosine oracle") {
    const ToyBackbone& b = planted();
    const std::size_t n = b.vocab_size();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        double c = 0;
        for (std::size_t k = 0; k < b.dim(); ++k) c += b.table(i, k) * b.table(j, k);
        const bool si = b.token_class[i] >= 0, sj = b.token_class[j] >= 0;
        if (si && sj) CHECK(c > 0.65);
        else CHECK(c < 0.45);
      }
  }
  SUBCASE("zero perturbation puts one class on one direction") {
    PlantedGeometryConfig cfg;
    cfg.n_signal = 2;
    cfg.n_classes = 1;
    cfg.perturbation = 0.0;
    cfg.n_distractor = 16;
    const ToyBackbone b = build_planted_geometry(cfg);
    double c = 0;
    for (std::size_t k = 0; k < b.dim(); ++k) c += b.table(0, k) * b.table(1, k);
    CHECK(c == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("infeasible requests") {
    PlantedGeometryConfig cfg;
    cfg.tau_lo = 0.7;
    CHECK_THROWS_AS(build_planted_geometry(cfg), InvalidArgument);
    cfg = {};
    cfg.dim = 2;
    CHECK_THROWS_AS(build_planted_geometry(cfg), InvalidArgument);
    cfg = {};
    cfg.dim = 4;
    cfg.n_distractor = 400;
    cfg.max_retries = 50;
    try {
      build_planted_geometry(cfg);
      FAIL("expected the retry budget to run out");
    } catch (const InvalidArgument& e) {
      CHECK(std::string(e.what()).find("increase dim") != std::string::npos);
    }
    cfg = {};
    cfg.class_cosine = 0.3;
    CHECK_THROWS_AS(build_planted_geometry(cfg), InvalidArgument);
  }
  SUBCASE("graph at a threshold between the bounds connects exactly the signal tokens") {
    const ToyBackbone& b = planted();
    RelationalXorSpec xs;
    xs.n_samples = 50;
    const DiagnosticDataset ds = generate_relational_xor(xs, b);
    GraphConfig gc;
    gc.tau = 0.55;
    for (const auto& smp : ds.samples) {
      const TokenGraph g = build_token_graph(embed(smp.tokens, b), gc);
      std::set<std::pair<std::size_t, std::size_t>> want;
      for (std::size_t i = 0; i < smp.tokens.size(); ++i)
        for (std::size_t j = 0; j < smp.tokens.size(); ++j)
          if (i == j || (b.token_class[smp.tokens[i]] >= 0 && b.token_class[smp.tokens[j]] >= 0))
            want.insert({i, j});
      std::set<std::pair<std::size_t, std::size_t>> got;
      for (const Edge& e : g.edges) got.insert({e.src, e.dst});
      CHECK(got == want);
    }
  }
}

TEST_CASE("relational xor") {
  const ToyBackbone& b = planted();
  RelationalXorSpec xs;
  xs.n_samples = 10000;
  std::vector<XorCase> cases;
  const DiagnosticDataset ds = generate_relational_xor(xs, b, &cases);
  REQUIRE(cases.size() == 10000);
  std::size_t ones = 0;
  std::size_t per_case[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const auto& smp = ds.samples[i];
    CHECK(smp.tokens.size() == 64);
    bool has_a = false, has_b = false;
    std::set<std::uint32_t> distractors;
    std::size_t n_distractors = 0;
    for (auto id : smp.tokens) {
      has_a = has_a || b.token_class[id] == 0;
      has_b = has_b || b.token_class[id] == 1;
      if (b.token_class[id] < 0) {
        distractors.insert(id);
        ++n_distractors;
      }
    }
    CHECK(distractors.size() == n_distractors);
    const XorCase c = cases[i];
    CHECK(has_a == (c == XorCase::a_only || c == XorCase::both));
    CHECK(has_b == (c == XorCase::b_only || c == XorCase::both));
    CHECK(smp.label == (has_a != has_b ? 1 : 0));
    CHECK(count_role(smp, TokenRole::distractor) == xs.distractor_count());
    ones += smp.label;
    ++per_case[static_cast<int>(c)];
  }
  const double balance = static_cast<double>(ones) / 10000;
  CHECK(balance >= 0.45);
  CHECK(balance <= 0.55);
  for (std::size_t n : per_case) CHECK(n > 2300);

  RelationalXorSpec tight = xs;
  tight.seq_len = 10;
  tight.tokens_per_class = 2;
  CHECK_THROWS_AS(generate_relational_xor(tight, b), InvalidArgument);
  const ToyBackbone r = random_backbone(100, 8, 1);
  CHECK_THROWS_AS(generate_relational_xor(xs, r), InvalidArgument);
}
