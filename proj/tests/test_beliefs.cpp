#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "posg/beliefs/particles.hpp"
#include "posg/oracles/oracles.hpp"
#include "posg/scenarios/scenarios.hpp"
#include "toy_games.hpp"

using namespace posg;

namespace {

std::unique_ptr<Game> tag_game() {
  ScenarioConfig c;
  c.name = "tag";
  return make_game(c);
}

JointPolicy small_policy(const Game& g, std::uint64_t seed) {
  std::vector<GatherMode> modes(g.num_players(), GatherMode::Active);
  return init_joint_policy(g, modes, seed, std::vector<std::size_t>{8});
}

}  // namespace

TEST_CASE("partition of 10 particles into 3 blocks") {
  auto g = tag_game();
  Rng rng(1);
  ParticleSet p = init_particles(*g, 10, 3, rng);
  REQUIRE(p.partition().size() == 3);
  CHECK(p.partition()[0].size() == 4);
  CHECK(p.partition()[1].size() == 3);
  CHECK(p.partition()[2].size() == 3);
  for (double w : p.weights()) CHECK(w == doctest::Approx(0.1).epsilon(1e-15));
  for (std::size_t k = 0; k < 10; ++k) {
    for (double h : p.history(k)) CHECK(h == 0.0);
  }
  CHECK_THROWS(init_particles(*g, 2, 3, rng));
  CHECK_THROWS(init_particles(*g, 5, 0, rng));
  CHECK_THROWS(p.set_partition({{0, 1}, {1, 2}}));
  CHECK_THROWS(p.set_partition({{0, 1, 2}}));
}

TEST_CASE("sample_batch") {
  auto g = tag_game();
  Rng rng(2);
  SUBCASE("uniform frequencies") {
    ParticleSet p = init_particles(*g, 10, 1, rng);
    std::vector<int> count(10, 0);
    for (std::size_t k : sample_batch(p, 100000, rng)) ++count[k];
    for (int c : count) CHECK(std::abs(c / 100000.0 - 0.1) < 0.005);
  }
  SUBCASE("zero-weight particles are never drawn") {
    ParticleSet p = init_particles(*g, 5, 1, rng);
    p.weights()[2] = 0.0;
    for (std::size_t k : sample_batch(p, 10000, rng)) REQUIRE(k != 2);
    for (double& w : p.weights()) w = 0.0;
    CHECK_THROWS(sample_batch(p, 3, rng));
  }
  SUBCASE("single particle") {
    ParticleSet p = init_particles(*g, 1, 1, rng);
    CHECK(sample_batch(p, 7, rng) == std::vector<std::size_t>(7, 0));
  }
}

TEST_CASE("gamma = 0 leaves weights unchanged") {
  auto game = testing::planar_game(2);
  const JointPolicy policy = small_policy(game, 3);
  Rng rng(3);
  ParticleSet p = init_particles(game, 50, 1, rng);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  for (double& w : p.weights()) w = u(rng);
  const std::vector<double> before(p.weights().begin(), p.weights().end());
  const std::vector<double> z{0.3, 0.1};
  std::vector<std::size_t> all(p.size());
  std::iota(all.begin(), all.end(), 0);
  propagate_particles(game, p, all, policy, Conditioning{0, z}, {.gamma = 0.0}, 7);
  CHECK(std::vector<double>(p.weights().begin(), p.weights().end()) == before);
}

TEST_CASE("gamma = 1 reweights two particles by Bayes rule") {
  auto game = testing::planar_game(2);
  const JointPolicy policy = small_policy(game, 4);
  Rng rng(4);
  ParticleSet p = init_particles(game, 2, 1, rng);
  const std::vector<double> z{0.2, -0.4};
  update_particles(game, p, Conditioning{0, z}, policy, {.gamma = 1.0}, 11);
  const double l0 = std::exp(game.observation_log_density(p.state(0), 0, z));
  const double l1 = std::exp(game.observation_log_density(p.state(1), 0, z));
  CHECK(p.weights()[0] == doctest::Approx(l0 / (l0 + l1)).epsilon(1e-12));
  CHECK(p.weights()[1] == doctest::Approx(l1 / (l0 + l1)).epsilon(1e-12));
  // the conditioned player's newest window entry is the true observation
  for (std::size_t k = 0; k < 2; ++k) {
    auto h = p.history(k);
    CHECK(h[game.window_size(0) - 2] == z[0]);
    CHECK(h[game.window_size(0) - 1] == z[1]);
  }
}

TEST_CASE("particle filter matches exact enumeration on the binary game") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto report = oracles::belief_check(10000, 5, seed);
    CHECK(report.max_tv < 0.02);
  }
  // exact posterior by hand: prior 0.3 flips to 0.7, z = 1 with accuracy 0.8
  const auto exact = oracles::exact_posterior(0.3, 0.8, {1});
  CHECK(exact[0] == doctest::Approx(0.7 * 0.8 / (0.7 * 0.8 + 0.3 * 0.2)));
}

TEST_CASE("degenerate weights are reset") {
  auto g = tag_game();
  Rng rng(5);
  ParticleSet p = init_particles(*g, 4, 1, rng);
  for (double& w : p.weights()) w = 1e-310;
  CHECK(normalize_weights(p).degenerate);
  for (double w : p.weights()) CHECK(w == 0.25);
  p.weights()[0] = std::numeric_limits<double>::infinity();
  CHECK(normalize_weights(p).degenerate);
  p.weights()[0] = 3.0;
  CHECK_FALSE(normalize_weights(p).degenerate);
  CHECK(p.weights()[0] == doctest::Approx(3.0 / 3.75));
}

TEST_CASE("gaussian summary examples") {
  auto g = tag_game();
  Rng rng(6);
  SUBCASE("identical particles") {
    ParticleSet p = init_particles(*g, 5, 1, rng);
    for (std::size_t k = 0; k < 5; ++k) {
      p.state(k)[4] = 1.5;
      p.state(k)[5] = -0.5;
    }
    const auto s = gaussian_summary(*g, p, 1);
    CHECK(s.mean[0] == doctest::Approx(1.5));
    CHECK(s.mean[1] == doctest::Approx(-0.5));
    CHECK(s.covariance[0] == doctest::Approx(1e-6).epsilon(1e-9));
    CHECK(s.covariance[1] == doctest::Approx(0.0));
    CHECK(s.covariance[3] == doctest::Approx(1e-6).epsilon(1e-9));
  }
  SUBCASE("two particles at +-(1, 0)") {
    ParticleSet p = init_particles(*g, 2, 1, rng);
    p.state(0)[0] = 1.0;
    p.state(0)[1] = 0.0;
    p.state(1)[0] = -1.0;
    p.state(1)[1] = 0.0;
    const auto s = gaussian_summary(*g, p, 0);
    CHECK(s.mean[0] == doctest::Approx(0.0));
    CHECK(s.covariance[0] == doctest::Approx(1.0 + 1e-6));
    CHECK(s.covariance[3] == doctest::Approx(1e-6));
  }
}

TEST_CASE("surprisal examples") {
  GaussianSummary s;
  s.mean = {1.0, 2.0};
  s.covariance = {1.0, 0.0, 0.0, 1.0};
  const std::vector<double> at{1.0, 2.0};
  CHECK(surprisal(s, at) == doctest::Approx(std::log(2 * std::numbers::pi)).epsilon(1e-12));
  CHECK(surprisal(s, at) == doctest::Approx(1.8379).epsilon(1e-4));
  const std::vector<double> one_sd{2.0, 2.0};
  CHECK(surprisal(s, one_sd) == doctest::Approx(std::log(2 * std::numbers::pi) + 0.5));
  // along an eigenvector of a correlated covariance
  s.covariance = {2.0, 1.0, 1.0, 2.0};  // eigenvalue 3 along (1,1)/sqrt2
  const double step = std::sqrt(3.0) / std::sqrt(2.0);
  const std::vector<double> off{1.0 + step, 2.0 + step};
  CHECK(surprisal(s, off) - surprisal(s, at) == doctest::Approx(0.5));
}

TEST_CASE("surprisal falls as particles concentrate on the truth") {
  auto g = tag_game();
  Rng rng(7);
  const std::vector<double> truth{0.4, -0.3};
  double prev = std::numeric_limits<double>::infinity();
  for (double spread : {2.0, 1.0, 0.5, 0.25, 0.1}) {
    double mean = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
      ParticleSet p = init_particles(*g, 200, 1, rng);
      std::normal_distribution<double> n(0.0, spread);
      for (std::size_t k = 0; k < p.size(); ++k) {
        p.state(k)[4] = truth[0] + n(rng);
        p.state(k)[5] = truth[1] + n(rng);
      }
      mean += surprisal(*g, p, 1, truth) / 50.0;
    }
    CHECK(mean < prev);
    prev = mean;
  }
}

TEST_CASE("updates conserve count, windows and normalization (1000 cases)") {
  auto game = testing::planar_game(2);
  Rng rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int c = 0; c < 1000; ++c) {
    const std::size_t k_all = 1 + rng() % 30;
    const std::size_t n_eq = 1 + rng() % std::min<std::size_t>(k_all, 4);
    ParticleSet p = init_particles(game, k_all, n_eq, rng);
    const auto partition = p.partition();
    const JointPolicy policy = small_policy(game, rng());
    const std::vector<double> z = standard_normals(rng, 2);
    const std::size_t player = rng() % 2;
    const auto out = update_particles(game, p, Conditioning{player, z}, policy,
                                      {.gamma = u(rng), .parallel = false}, rng());
    REQUIRE(p.size() == k_all);
    REQUIRE(p.history_dim() == game.history_dim());
    REQUIRE(p.partition() == partition);
    const double total = std::accumulate(p.weights().begin(), p.weights().end(), 0.0);
    REQUIRE(total == doctest::Approx(1.0).epsilon(1e-12));
    if (!out.degenerate) REQUIRE(effective_sample_size(p) <= k_all + 1e-9);
  }
}

TEST_CASE("gamma = 0 is a fixed point of the weights (1000 cases)") {
  auto g = tag_game();
  Rng rng(9);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int c = 0; c < 1000; ++c) {
    ParticleSet p = init_particles(*g, 1 + rng() % 8, 1, rng);
    for (double& w : p.weights()) w = u(rng);
    const std::vector<double> before(p.weights().begin(), p.weights().end());
    const JointPolicy policy = small_policy(*g, rng());
    const std::vector<double> z = standard_normals(rng, 6);
    std::vector<std::size_t> all(p.size());
    std::iota(all.begin(), all.end(), 0);
    const bool conditioned = c % 2 == 0;
    propagate_particles(*g, p, all, policy,
                        conditioned ? std::optional<Conditioning>(Conditioning{0, z}) : std::nullopt,
                        {.gamma = conditioned ? 0.0 : 1.0, .parallel = false}, rng());
    REQUIRE(std::vector<double>(p.weights().begin(), p.weights().end()) == before);
  }
}

TEST_CASE("serial and parallel propagation are bitwise equal") {
  auto g = tag_game();
  Rng rng(10);
  ParticleSet a = init_particles(*g, 500, 3, rng);
  ParticleSet b = a;
  const JointPolicy policy = small_policy(*g, 5);
  const std::vector<double> z{0, 0, 0, 0, 0.5, 0.5};
  for (int step = 0; step < 3; ++step) {
    update_particles(*g, a, Conditioning{1, z}, policy, {.gamma = 0.3, .parallel = false}, step);
    update_particles(*g, b, Conditioning{1, z}, policy, {.gamma = 0.3, .parallel = true}, step);
  }
  CHECK(a == b);
}

TEST_CASE("systematic resampling") {
  auto g = tag_game();
  Rng rng(11);
  ParticleSet p = init_particles(*g, 100, 2, rng);
  for (double& w : p.weights()) w = 0.0;
  p.weights()[17] = 1.0;
  const auto partition = p.partition();
  const std::vector<double> kept(p.state(17).begin(), p.state(17).end());
  CHECK(effective_sample_size(p) == doctest::Approx(1.0));
  systematic_resample(p, rng);
  CHECK(p.size() == 100);
  CHECK(p.partition() == partition);
  for (std::size_t k = 0; k < 100; ++k) {
    REQUIRE(std::vector<double>(p.state(k).begin(), p.state(k).end()) == kept);
    REQUIRE(p.weights()[k] == 0.01);
  }
  CHECK(effective_sample_size(p) == doctest::Approx(100.0));
}

TEST_CASE("particle cloud dump") {
  auto g = tag_game();
  Rng rng(12);
  ParticleSet p = init_particles(*g, 3, 1, rng);
  const auto path = std::filesystem::temp_directory_path() / "posg_cloud_test.txt";
  std::filesystem::remove(path);
  append_particle_cloud(*g, p, 0, path);
  append_particle_cloud(*g, p, 1, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "step particle player x y weight");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 2 * 3 * 2);
  std::filesystem::remove(path);
}
