#include <doctest.h>

#include <cmath>
#include <numeric>

#include "gradcheck.hpp"
#include "sgc/error.hpp"
#include "sgc/potentialnet.hpp"
#include "synth.hpp"

using namespace sgc;
using namespace sgc::ad;

namespace {

ModelConfig small_config(ModelMode mode, std::size_t tasks = 1) {
  ModelConfig c;
  c.mode = mode;
  c.task_count = tasks;
  c.element_vocab = {"C", "N", "O"};
  c.f_bond = 6;
  c.f_spatial = 5;
  c.f_gather = 6;
  c.bond_k = 2;
  c.spatial_k = 2;
  c.k = 2;
  c.fc_widths = {7, tasks};
  c.seed = 42;
  return c;
}

graph::GraphTensors graph_of(const chem::MolecularSystem& s, const ModelConfig& c) {
  return graph::build_graph(s, c.schema, chem::ElementVocab::from_symbols(c.element_vocab));
}

void copy_parameters(const PotentialNetModel& from, PotentialNetModel& to, const std::string& src,
                     const std::string& dst) {
  for (const auto& p : from.parameters().items()) {
    std::string name = p.name;
    if (name.rfind(src, 0) == 0) name = dst + name.substr(src.size());
    Var v = to.parameters().get(name);
    v.mutable_value() = p.var.value();
  }
}

}  // namespace

TEST_CASE("output shape") {
  Rng rng(1);
  for (ModelMode mode : {ModelMode::staged, ModelMode::single_update, ModelMode::ligand_only,
                         ModelMode::ggnn_plain}) {
    auto c = small_config(mode, 3);
    PotentialNetModel model(c);
    auto mol = testing::random_molecule(rng, "m", 6);
    Var y = model.forward(graph_of(mol, c));
    CHECK(y.rows() == 1);
    CHECK(y.cols() == 3);
    CHECK(y.value().all_finite());
  }
}

TEST_CASE("configuration checks") {
  auto c = small_config(ModelMode::staged);
  c.fc_widths = {7, 2};
  CHECK_THROWS_AS(PotentialNetModel{c}, ConfigError);
  c = small_config(ModelMode::single_update);
  c.spatial_k = 0;
  CHECK_THROWS_AS(PotentialNetModel{c}, ConfigError);
  CHECK_THROWS_AS(parse_model_mode("staged2"), ConfigError);
  c = small_config(ModelMode::ggnn_plain);
  auto back = model_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
}

TEST_CASE("schema mismatch is reported") {
  Rng rng(2);
  auto c = small_config(ModelMode::staged);
  PotentialNetModel model(c);
  auto mol = testing::random_molecule(rng, "m", 5);
  auto g = graph::build_graph(mol, c.schema, chem::ElementVocab::from_symbols({"C", "N"}));
  CHECK_THROWS_WITH_AS(model.forward(g), doctest::Contains("schema mismatch"), ShapeError);
  graph::EdgeSchema other;
  other.distance_bins.pop_back();
  auto g2 = graph::build_graph(mol, other, chem::ElementVocab::from_symbols(c.element_vocab));
  CHECK_THROWS_AS(model.forward(g2), ShapeError);

  std::vector<Sample> batch{{"good", graph_of(mol, c), {1.0}}, {"bad-one", g, {1.0}}};
  CHECK_THROWS_WITH(predict_batch(model, batch), doctest::Contains("bad-one"));
}

TEST_CASE("masked complex reproduces the ligand-only model") {
  Rng rng(3);
  auto staged_cfg = small_config(ModelMode::staged);
  auto ligand_cfg = small_config(ModelMode::ligand_only);
  PotentialNetModel staged(staged_cfg), ligand(ligand_cfg);
  for (int trial = 0; trial < 5; ++trial) {
    auto g = graph_of(testing::random_complex(rng, "c"), staged_cfg);
    graph::GraphTensors masked = g;
    for (std::size_t i = g.n_ligand; i < g.n; ++i)
      for (std::size_t c = 0; c < g.x.cols; ++c) masked.x.data[i * g.x.cols + c] = 0.0f;
    for (std::size_t i = 0; i < g.n; ++i)
      for (std::size_t j = 0; j < g.n; ++j)
        if (i >= g.n_ligand || j >= g.n_ligand)
          for (std::size_t e = 0; e < g.n_edge_types; ++e)
            masked.adjacency[(i * g.n + j) * g.n_edge_types + e] = 0;
    CHECK(staged.forward(masked).value() == ligand.forward(g).value());
  }
}

TEST_CASE("protein atom order does not matter") {
  Rng rng(4);
  auto c = small_config(ModelMode::staged);
  PotentialNetModel model(c);
  for (int trial = 0; trial < 5; ++trial) {
    auto s = testing::random_complex(rng, "c");
    std::vector<std::size_t> p(s.size());
    std::iota(p.begin(), p.end(), 0);
    std::vector<std::size_t> tail(p.begin() + static_cast<std::ptrdiff_t>(s.n_ligand), p.end());
    rng.shuffle(tail);
    std::copy(tail.begin(), tail.end(), p.begin() + static_cast<std::ptrdiff_t>(s.n_ligand));
    chem::MolecularSystem t = s;
    std::vector<std::size_t> inv(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
      t.atoms[k] = s.atoms[p[k]];
      inv[p[k]] = k;
    }
    for (auto& b : t.bonds) {
      b.i = inv[b.i];
      b.j = inv[b.j];
    }
    const double a = model.forward(graph_of(s, c)).value()[0];
    const double b = model.forward(graph_of(t, c)).value()[0];
    CHECK(std::abs(a - b) <= 1e-5);
  }
}

TEST_CASE("bond-only staged model equals the plain network") {
  Rng rng(5);
  auto sc = small_config(ModelMode::staged);
  sc.spatial_k = 0;
  auto gc = small_config(ModelMode::ggnn_plain);
  gc.k = sc.bond_k;
  gc.f_gather = sc.f_bond;
  gc.message_kind = nn::MessageKind::mlp;
  PotentialNetModel staged(sc), plain(gc);
  copy_parameters(staged, plain, "bond.", "ggnn.");
  for (int trial = 0; trial < 5; ++trial) {
    auto g = graph_of(testing::random_molecule(rng, "m", 7), sc);
    for (std::size_t p = 0; p < g.n * g.n; ++p)
      for (std::size_t e = g.n_bond_types; e < g.n_edge_types; ++e)
        g.adjacency[p * g.n_edge_types + e] = 0;
    CHECK(std::abs(staged.forward(g).value()[0] - plain.forward(g).value()[0]) <= 1e-6);
  }
}

TEST_CASE("shared bond messages agree across stages without distance edges") {
  Rng rng(6);
  const std::size_t f = chem::feature_width(chem::ElementVocab::from_symbols({"C", "N", "O"}));
  ParameterSet params;
  auto bond = nn::EdgeMessageNet::create(params, "bond", 4, f, nn::MessageKind::mlp, rng);
  auto spatial = nn::EdgeMessageNet::create(params, "spatial", 4, f, nn::MessageKind::mlp, rng);
  spatial.fns.insert(spatial.fns.begin(), bond.fns.begin(), bond.fns.end());

  auto c = small_config(ModelMode::staged);
  auto g = graph_of(testing::random_complex(rng, "c"), c);
  for (std::size_t p = 0; p < g.n * g.n; ++p)
    for (std::size_t e = g.n_bond_types; e < g.n_edge_types; ++e) g.adjacency[p * g.n_edge_types + e] = 0;
  auto all = nn::edge_slices(g);
  Tensor h(g.n, f);
  for (std::size_t k = 0; k < h.size(); ++k) h[k] = static_cast<Real>(rng.uniform(-1, 1));
  Tensor m1 = nn::message_pass(nn::leading_slices(all, 4), constant(h), bond).value();
  Tensor m2 = nn::message_pass(all, constant(h), spatial).value();
  CHECK(m1 == m2);

  auto shared = small_config(ModelMode::staged);
  shared.f_bond = f;
  shared.share_bond_messages = true;
  PotentialNetModel model(shared);
  auto separate_cfg = shared;
  separate_cfg.share_bond_messages = false;
  PotentialNetModel separate(separate_cfg);
  // Four bond message networks of width f, each 2f^2 + 2f scalars, are reused.
  CHECK(separate.parameters().scalar_count() - model.parameters().scalar_count() ==
        4 * (2 * f * f + 2 * f));
  CHECK(model.forward(graph_of(testing::random_complex(rng, "c"), shared)).value().all_finite());
}

TEST_CASE("losses") {
  SUBCASE("zero logits give ln 2 per label") {
    Var z = constant(Tensor(1, 1));
    CHECK(loss(z, {1.0}, TaskKind::multitask_classification).value()[0] ==
          doctest::Approx(std::log(2.0)));
    CHECK(loss(z, {0.0}, TaskKind::multitask_classification).value()[0] ==
          doctest::Approx(std::log(2.0)));
  }
  SUBCASE("perfect regression") {
    Var p = constant(Tensor(1, 2, {1.5f, -2}));
    CHECK(loss(p, {1.5, -2.0}, TaskKind::regression).value()[0] == 0.0f);
  }
  SUBCASE("an absent task drops out") {
    Var p2 = constant(Tensor(1, 2, {0.7f, 3}));
    Var p1 = constant(Tensor(1, 1, {0.7f}));
    for (TaskKind kind : {TaskKind::regression, TaskKind::multitask_classification}) {
      const double two = loss(p2, {1.0, std::nullopt}, kind).value()[0];
      const double one = loss(p1, {1.0}, kind).value()[0];
      CHECK(two == doctest::Approx(one));
    }
  }
  SUBCASE("all absent") {
    CHECK_THROWS_AS(loss(constant(Tensor(1, 1)), {std::nullopt}, TaskKind::regression),
                    NumericError);
  }
  SUBCASE("classification averages per task over present samples") {
    std::vector<std::optional<double>> a{1.0, std::nullopt}, b{0.0, 1.0};
    auto w = loss_weights({&a, &b}, 2, TaskKind::multitask_classification);
    CHECK(w[0][0] == doctest::Approx(0.25));
    CHECK(w[0][1] == 0.0f);
    CHECK(w[1][1] == doctest::Approx(0.5));
  }
}

TEST_CASE("batch prediction") {
  Rng rng(7);
  auto c = small_config(ModelMode::staged, 2);
  c.dropout = 0.5;
  PotentialNetModel model(c);
  std::vector<Sample> batch;
  for (int k = 0; k < 4; ++k) batch.push_back({"s" + std::to_string(k), graph_of(testing::random_complex(rng, "c"), c), {}});
  Tensor all = predict_batch(model, batch);
  CHECK(all.rows() == 4);
  CHECK(predict_batch(model, batch) == all);
  Tensor one = predict_batch(model, std::span<const Sample>(batch).subspan(2, 1));
  CHECK(one.row(0)[0] == all.row(2)[0]);
  CHECK(one.row(0)[1] == all.row(2)[1]);
  std::vector<Sample> reversed(batch.rbegin(), batch.rend());
  Tensor rev = predict_batch(model, reversed);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t t = 0; t < 2; ++t) CHECK(rev(3 - r, t) == all(r, t));
  CHECK(model.forward(batch[1].graph).value()[1] == all(1, 1));
}

TEST_CASE("identical seeds give identical parameters") {
  auto c = small_config(ModelMode::staged);
  PotentialNetModel a(c), b(c);
  for (std::size_t k = 0; k < a.parameters().items().size(); ++k)
    CHECK(a.parameters().items()[k].var.value() == b.parameters().items()[k].var.value());
  c.seed = 43;
  PotentialNetModel d(c);
  CHECK_FALSE(d.parameters().items()[0].var.value() == a.parameters().items()[0].var.value());
}

TEST_CASE("full model gradients match finite differences") {
  for (const auto& r : testing::check_models(29)) {
    INFO(r.name << ": " << r.detail);
    CHECK(r.pass);
  }
}
