#include "glot/model.hpp"

#include <string>

#include "glot/error.hpp"
#include "glot/init.hpp"

namespace glot {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(PoolerKind k) {
  switch (k) {
    case PoolerKind::glot: return "glot";
    case PoolerKind::mean: return "mean";
    case PoolerKind::max: return "max";
    case PoolerKind::boundary_first: return "first";
    case PoolerKind::boundary_last: return "last";
    case PoolerKind::adapool: return "adapool";
  }
  return "?";
}

PoolerKind parse_pooler(std::string_view s) {
  if (s == "glot") return PoolerKind::glot;
  if (s == "mean") return PoolerKind::mean;
  if (s == "max") return PoolerKind::max;
  if (s == "first" || s == "cls") return PoolerKind::boundary_first;
  if (s == "last" || s == "boundary") return PoolerKind::boundary_last;
  if (s == "adapool") return PoolerKind::adapool;
  throw InvalidArgument("unknown pooler '" + std::string(s) + "'");
}

std::size_t ModelSpec::embedding_dim() const noexcept {
  return pooler == PoolerKind::glot ? gnn.fused_dim() : gnn.input_dim;
}

std::size_t ModelSpec::head_inputs() const noexcept { return sides * embedding_dim(); }

std::size_t ModelSpec::head_outputs() const noexcept {
  return task == TaskKind::regression ? 1 : num_classes;
}

void ModelSpec::validate() const {
  if (gnn.input_dim == 0) throw InvalidArgument("model: input dimension is not set");
  if (pooler == PoolerKind::glot) {
    graph.validate();
    gnn.validate();
    if (readout_hidden == 0) throw InvalidArgument("model: readout hidden size must be >= 1");
    if (identity_input && gnn.hidden_dim != gnn.input_dim)
      throw InvalidArgument("model: identity input projection needs hidden == input dim (" +
                            std::to_string(gnn.hidden_dim) + " vs " +
                            std::to_string(gnn.input_dim) + ")");
  } else if (freeze_readout || identity_input) {
    throw InvalidArgument("model: readout/input freezing only applies to the glot pooler");
  }
  if (pooler == PoolerKind::adapool && adapool_hidden == 0)
    throw InvalidArgument("model: adapool hidden size must be >= 1");
  switch (task) {
    case TaskKind::single:
      if (sides != 1) throw InvalidArgument("model: single-sentence task takes one sentence");
      break;
    case TaskKind::pair:
    case TaskKind::retrieval:
      if (sides != 2) throw InvalidArgument("model: pair and retrieval tasks take two sentences");
      break;
    case TaskKind::regression:
      if (sides != 1 && sides != 2) throw InvalidArgument("model: regression takes 1 or 2 sentences");
      break;
  }
  if ((task == TaskKind::single || task == TaskKind::pair) && num_classes < 2)
    throw InvalidArgument("model: classification needs at least 2 classes");
  if (task == TaskKind::retrieval && !(temperature > 0.0))
    throw InvalidArgument("model: temperature must be > 0");
}

ordered_json to_json(const ModelSpec& spec) {
  ordered_json j;
  j["pooler"] = to_string(spec.pooler);
  j["task"] = to_string(spec.task);
  j["num_classes"] = spec.num_classes;
  j["sides"] = spec.sides;
  j["input_dim"] = spec.gnn.input_dim;
  j["graph"] = {{"tau", spec.graph.tau},
                {"self_loops", spec.graph.add_self_loops},
                {"symmetric", spec.graph.symmetric}};
  j["gnn"] = {{"variant", to_string(spec.gnn.variant)},
              {"layers", spec.gnn.num_layers},
              {"hidden", spec.gnn.hidden_dim},
              {"jk", to_string(spec.gnn.jk)},
              {"aggregate", to_string(spec.gnn.aggregate)}};
  j["readout_hidden"] = spec.readout_hidden;
  j["adapool_hidden"] = spec.adapool_hidden;
  j["freeze_readout"] = spec.freeze_readout;
  j["identity_input"] = spec.identity_input;
  j["temperature"] = spec.temperature;
  j["seed"] = spec.seed;
  return j;
}

ModelSpec model_spec_from_json(const json& j, bool check) {
  try {
    ModelSpec s;
    s.pooler = parse_pooler(j.at("pooler").get<std::string>());
    s.task = parse_task_kind(j.at("task").get<std::string>());
    s.num_classes = j.at("num_classes").get<std::size_t>();
    s.sides = j.at("sides").get<std::size_t>();
    s.gnn.input_dim = j.at("input_dim").get<std::size_t>();
    const json& g = j.at("graph");
    s.graph.tau = g.at("tau").get<double>();
    s.graph.add_self_loops = g.at("self_loops").get<bool>();
    s.graph.symmetric = g.at("symmetric").get<bool>();
    const json& n = j.at("gnn");
    s.gnn.variant = parse_gnn_variant(n.at("variant").get<std::string>());
    s.gnn.num_layers = n.at("layers").get<std::size_t>();
    s.gnn.hidden_dim = n.at("hidden").get<std::size_t>();
    s.gnn.jk = parse_jk_mode(n.at("jk").get<std::string>());
    s.gnn.aggregate = parse_aggregate(n.at("aggregate").get<std::string>());
    s.readout_hidden = j.at("readout_hidden").get<std::size_t>();
    s.adapool_hidden = j.at("adapool_hidden").get<std::size_t>();
    s.freeze_readout = j.at("freeze_readout").get<bool>();
    s.identity_input = j.at("identity_input").get<bool>();
    s.temperature = j.at("temperature").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
    if (check) s.validate();
    return s;
  } catch (const json::exception& e) {
    throw DataError(std::string("model spec: ") + e.what());
  }
}

std::vector<Parameter*> Model::all() {
  std::vector<Parameter*> out;
  if (spec.pooler == PoolerKind::glot) out = glot.all();
  if (spec.pooler == PoolerKind::adapool) out = adapool.all();
  if (spec.has_head()) {
    out.push_back(&head.w);
    out.push_back(&head.b);
  }
  return out;
}

std::vector<Parameter*> Model::trainable() {
  std::vector<Parameter*> out;
  if (spec.pooler == PoolerKind::glot) {
    if (!spec.identity_input) out.push_back(&glot.gnn.w_in);
    for (Parameter* p : glot.gnn.all())
      if (p != &glot.gnn.w_in) out.push_back(p);
    if (!spec.freeze_readout)
      for (Parameter* p : glot.readout.all()) out.push_back(p);
  }
  if (spec.pooler == PoolerKind::adapool)
    for (Parameter* p : adapool.all()) out.push_back(p);
  if (spec.has_head()) {
    out.push_back(&head.w);
    out.push_back(&head.b);
  }
  return out;
}

Model init_model(const ModelSpec& spec) {
  spec.validate();
  Model m;
  m.spec = spec;
  if (spec.pooler == PoolerKind::glot) {
    m.glot = init_glot_params(spec.gnn, spec.readout_hidden, spec.seed);
    if (spec.identity_input) m.glot.gnn.w_in.value = Matrix::identity(spec.gnn.input_dim);
    if (spec.freeze_readout) m.glot.readout.v.value.fill(0.0);
  }
  if (spec.pooler == PoolerKind::adapool)
    m.adapool = init_adapool_params(spec.gnn.input_dim, spec.adapool_hidden, spec.seed);
  if (spec.has_head()) m.head = init_head_params(spec.head_inputs(), spec.head_outputs(), spec.seed);
  return m;
}

std::size_t count_trainable_params(const ModelSpec& spec) {
  Model m = init_model(spec);
  std::size_t n = 0;
  for (const Parameter* p : m.trainable()) n += p->scalar_count();
  return n;
}

Var encode(Tape& tape, Model& model, std::span<const Matrix* const> sentences,
           std::span<const TokenGraph* const> graphs) {
  if (sentences.empty()) throw InvalidArgument("encode: empty batch");
  const ModelSpec& spec = model.spec;
  if (spec.pooler == PoolerKind::glot) {
    if (graphs.size() != sentences.size())
      throw InvalidArgument("encode: glot pooler needs one graph per sentence");
    const TokenGraph batched = batch_graphs(graphs);
    if (spec.identity_input)
      return glot_pool(tape, batched, tape.constant(model.glot.gnn.w_in.value), spec.gnn, model.glot);
    return glot_pool(tape, batched, spec.gnn, model.glot);
  }

  const StackedTokens st = stack_sentences(sentences);
  Var rows = tape.constant(st.rows);
  const std::size_t n = st.num_sentences();
  switch (spec.pooler) {
    case PoolerKind::mean: return mean_pool(rows, st.segment, n);
    case PoolerKind::max: return max_pool(rows, st.segment, n);
    case PoolerKind::boundary_first: return boundary_token_pool(rows, st.sizes, Boundary::first);
    case PoolerKind::boundary_last: return boundary_token_pool(rows, st.sizes, Boundary::last);
    case PoolerKind::adapool:
      return adapool(rows, st.segment, n, tape.param(model.adapool.w1), tape.param(model.adapool.b1),
                     tape.param(model.adapool.w2), tape.param(model.adapool.b2));
    case PoolerKind::glot: break;
  }
  throw InvalidArgument("encode: unsupported pooler");
}

ordered_json params_to_json(Model& model) {
  ordered_json j;
  j["schema"] = "glot.params/1";
  j["spec"] = to_json(model.spec);
  ordered_json ps = ordered_json::object();
  for (const Parameter* p : model.all()) {
    ps[p->name] = {{"rows", p->value.rows()},
                   {"cols", p->value.cols()},
                   {"data", p->value.storage()}};
  }
  j["parameters"] = std::move(ps);
  return j;
}

Model model_from_json(const json& j) {
  if (!j.contains("schema") || j["schema"] != "glot.params/1")
    throw DataError("params: unsupported or missing schema");
  Model m = init_model(model_spec_from_json(j.at("spec")));
  const json& ps = j.at("parameters");
  try {
    for (Parameter* p : m.all()) {
      if (!ps.contains(p->name)) throw DataError("params: missing parameter '" + p->name + "'");
      const json& e = ps.at(p->name);
      const auto rows = e.at("rows").get<std::size_t>();
      const auto cols = e.at("cols").get<std::size_t>();
      if (rows != p->value.rows() || cols != p->value.cols())
        throw DataError("params: shape mismatch for '" + p->name + "'");
      p->value = Matrix(rows, cols, e.at("data").get<std::vector<double>>());
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("params: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("params: ") + e.what());
  }
  return m;
}

}  // namespace glot
