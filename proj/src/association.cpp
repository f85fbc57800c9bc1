#include "textlcd/association.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include <Eigen/Eigenvalues>

#include "textlcd/log_io.hpp"

namespace textlcd {

void TravelDistance::extend(std::span<const Pose> poses) {
  for (std::size_t k = cumulative_.size(); k < poses.size(); ++k) {
    const Vec3& p = poses[k].translation();
    cumulative_.push_back(k == 0 ? 0.0 : cumulative_.back() + (p - last_).norm());
    last_ = p;
  }
}

std::optional<std::size_t> Ltem::find(const ObservationRef& ref) const {
  for (std::size_t i = 0; i < entities.size(); ++i) {
    const auto& m = entities[i].members;
    if (std::find(m.begin(), m.end(), ref) != m.end()) return i;
  }
  return std::nullopt;
}

namespace {

struct MergeAccumulator {
  Vec3 sum = Vec3::Zero();
  double count = 0.0;
  Vec3 mean() const { return sum / count; }
};

}  // namespace

Ltem build_ltem(const ObservationDatabase& db, std::span<const Pose> odometry,
                const TravelDistance& travel, std::size_t center, double d_ltem,
                LtemDirection direction, double r_merge) {
  Ltem ltem;
  ltem.center_frame = center;
  const std::size_t limit = std::min(odometry.size(), travel.size());
  if (center >= limit) return ltem;

  std::size_t first = center;
  while (first > 0 && travel.between(first - 1, center) <= d_ltem) --first;
  std::size_t last = center;
  if (direction == LtemDirection::TwoSided) {
    while (last + 1 < limit && travel.between(center, last + 1) <= d_ltem) ++last;
  }
  ltem.first_frame = first;
  ltem.last_frame = last;

  std::vector<MergeAccumulator> acc;
  std::unordered_map<std::string, std::vector<std::size_t>> by_content;
  for (std::size_t f = first; f <= last; ++f) {
    const auto& observations = db.entities_in_frame(f);
    for (std::size_t idx = 0; idx < observations.size(); ++idx) {
      const auto& obs = observations[idx];
      const Vec3 position = odometry[f] * obs.pose.translation();
      auto& same = by_content[obs.content];
      std::size_t target = ltem.entities.size();
      double best = r_merge;
      for (auto e : same) {
        const double d = (acc[e].mean() - position).norm();
        if (d < best) {
          best = d;
          target = e;
        }
      }
      if (target == ltem.entities.size()) {
        LtemEntity entity;
        entity.content = obs.content;
        entity.category = obs.category;
        entity.source_frame = f;
        ltem.entities.push_back(std::move(entity));
        acc.emplace_back();
        same.push_back(target);
      }
      acc[target].sum += position;
      acc[target].count += 1.0;
      ltem.entities[target].members.push_back({f, idx});
    }
  }

  // Running means can drift closer than r_merge; fold such pairs together.
  bool merged = true;
  std::vector<bool> alive(ltem.entities.size(), true);
  while (merged) {
    merged = false;
    for (auto& [content, ids] : by_content) {
      for (std::size_t a = 0; a < ids.size() && !merged; ++a) {
        if (!alive[ids[a]]) continue;
        for (std::size_t b = a + 1; b < ids.size(); ++b) {
          if (!alive[ids[b]]) continue;
          if ((acc[ids[a]].mean() - acc[ids[b]].mean()).norm() < r_merge) {
            acc[ids[a]].sum += acc[ids[b]].sum;
            acc[ids[a]].count += acc[ids[b]].count;
            auto& dst = ltem.entities[ids[a]];
            auto& src = ltem.entities[ids[b]];
            dst.members.insert(dst.members.end(), src.members.begin(), src.members.end());
            dst.source_frame = std::min(dst.source_frame, src.source_frame);
            alive[ids[b]] = false;
            merged = true;
            break;
          }
        }
      }
    }
  }

  std::vector<LtemEntity> kept;
  kept.reserve(ltem.entities.size());
  for (std::size_t e = 0; e < ltem.entities.size(); ++e) {
    if (!alive[e]) continue;
    ltem.entities[e].position = acc[e].mean();
    kept.push_back(std::move(ltem.entities[e]));
  }
  ltem.entities = std::move(kept);
  return ltem;
}

Ltem build_ltem(const ObservationDatabase& db, std::span<const Pose> odometry, std::size_t center,
                double d_ltem, LtemDirection direction, double r_merge) {
  TravelDistance travel(odometry);
  return build_ltem(db, odometry, travel, center, d_ltem, direction, r_merge);
}

std::vector<Association> putative_associations(const Ltem& m_c, const Ltem& m_p) {
  std::vector<Association> out;
  for (std::size_t i = 0; i < m_c.entities.size(); ++i) {
    for (std::size_t j = 0; j < m_p.entities.size(); ++j) {
      if (m_c.entities[i].content == m_p.entities[j].content) out.push_back({i, j});
    }
  }
  return out;
}

double consistency_score(const Vec3& p_i, const Vec3& p_j, const Vec3& q_i, const Vec3& q_j,
                         double epsilon) {
  const double x = std::abs((p_i - p_j).norm() - (q_i - q_j).norm());
  if (x > epsilon) return 0.0;
  return std::max(0.0, 1.0 - x / epsilon);
}

double consistency_score(const Association& a_i, const Association& a_j, const Ltem& m_c,
                         const Ltem& m_p, double epsilon) {
  return consistency_score(m_c.entities[a_i.entity_c].position, m_c.entities[a_j.entity_c].position,
                           m_p.entities[a_i.entity_p].position, m_p.entities[a_j.entity_p].position,
                           epsilon);
}

ConsistencyGraph build_consistency_graph(const std::vector<Association>& associations,
                                         const Ltem& m_c, const Ltem& m_p, double epsilon) {
  const auto n = static_cast<Eigen::Index>(associations.size());
  ConsistencyGraph g;
  g.affinity = Eigen::MatrixXd::Identity(n, n);
  g.exclusion.setConstant(n, n, false);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto& a = associations[i];
      const auto& b = associations[j];
      if (a.entity_c == b.entity_c || a.entity_p == b.entity_p) {
        g.exclusion(i, j) = g.exclusion(j, i) = true;
        continue;
      }
      const double s = consistency_score(a, b, m_c, m_p, epsilon);
      g.affinity(i, j) = g.affinity(j, i) = s;
    }
  }
  return g;
}

double subset_density(const ConsistencyGraph& g, std::span<const std::size_t> subset) {
  if (subset.empty()) return 0.0;
  double sum = 0.0;
  for (auto i : subset) {
    for (auto j : subset) sum += g.affinity(i, j);
  }
  return sum / static_cast<double>(subset.size());
}

namespace {

constexpr double kDensityTie = 1e-12;

bool better(double density, std::size_t size, double best_density, std::size_t best_size) {
  if (density > best_density + kDensityTie) return true;
  return std::abs(density - best_density) <= kDensityTie && size > best_size;
}

struct CliqueSearch {
  const ConsistencyGraph& g;
  std::vector<std::size_t> current;
  std::vector<std::size_t> best;
  double best_density = -1.0;

  void run(const std::vector<std::size_t>& candidates, double sum) {
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const std::size_t v = candidates[c];
      double added = 1.0;
      for (auto u : current) added += 2.0 * g.affinity(u, v);
      current.push_back(v);
      const double next_sum = sum + added;
      const double density = next_sum / static_cast<double>(current.size());
      if (better(density, current.size(), best_density, best.size())) {
        best_density = density;
        best = current;
      }
      std::vector<std::size_t> next;
      for (std::size_t w = c + 1; w < candidates.size(); ++w) {
        if (g.compatible(v, candidates[w])) next.push_back(candidates[w]);
      }
      if (!next.empty()) run(next, next_sum);
      current.pop_back();
    }
  }
};

bool compatible_with_all(const ConsistencyGraph& g, const std::vector<std::size_t>& set,
                         std::size_t v) {
  for (auto u : set) {
    if (!g.compatible(u, v)) return false;
  }
  return true;
}

}  // namespace

std::vector<std::size_t> solve_exact(const ConsistencyGraph& g) {
  const std::size_t n = g.size();
  if (n == 0) return {};
  CliqueSearch search{g, {}, {}, -1.0};
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  search.run(all, 0.0);
  std::sort(search.best.begin(), search.best.end());
  return search.best;
}

std::vector<std::size_t> solve_relaxed(const ConsistencyGraph& g) {
  const auto n = static_cast<Eigen::Index>(g.size());
  if (n == 0) return {};
  if (n == 1) return {0};

  Eigen::MatrixXd m = g.affinity;
  Eigen::MatrixXd conflict = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j && !g.compatible(i, j)) {
        conflict(i, j) = 1.0;
        m(i, j) = 0.0;
      }
    }
  }

  // Deterministic near-uniform start.
  Eigen::VectorXd u(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    u(i) = 1.0 + 1e-3 * std::fmod(0.6180339887498949 * static_cast<double>(i + 1), 1.0);
  }
  u.normalize();

  double penalty = 0.0;
  for (int outer = 0; outer < 60; ++outer) {
    const Eigen::MatrixXd a = m - penalty * conflict;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a, Eigen::EigenvaluesOnly);
    const double shift = std::max(0.0, -eig.eigenvalues()(0)) + 1e-6;
    for (int inner = 0; inner < 2000; ++inner) {
      Eigen::VectorXd v = a * u + shift * u;
      v = v.cwiseMax(0.0);
      const double norm = v.norm();
      if (norm <= 0.0) break;
      v /= norm;
      const double change = (v - u).norm();
      u = v;
      if (change < 1e-12) break;
    }
    const double umax = u.maxCoeff();
    bool clean = true;
    for (Eigen::Index i = 0; i < n && clean; ++i) {
      if (u(i) <= 1e-6 * umax) continue;
      for (Eigen::Index j = i + 1; j < n; ++j) {
        if (u(j) > 1e-6 * umax && conflict(i, j) > 0.0) {
          clean = false;
          break;
        }
      }
    }
    if (clean) break;
    penalty = penalty == 0.0 ? 0.1 : penalty * 2.0;
  }

  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return u(a) > u(b); });

  const auto total = [&](const std::vector<std::size_t>& set) {
    double sum = 0.0;
    for (auto a : set) {
      for (auto b : set) sum += g.affinity(a, b);
    }
    return sum;
  };
  const auto density = [&](const std::vector<std::size_t>& set) {
    return set.empty() ? 0.0 : total(set) / static_cast<double>(set.size());
  };
  const auto better = [](double d, std::vector<std::size_t> a, double best_d,
                         std::vector<std::size_t> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (std::abs(d - best_d) > 1e-12) return d > best_d;
    return a.size() != b.size() ? a.size() > b.size() : a < b;
  };

  // Greedy rounding seeded from each node, heaviest first, then local
  // search with single additions and swaps.
  std::vector<std::size_t> best;
  double best_d = -1.0;
  for (auto start : order) {
    std::vector<std::size_t> set{start};
    for (auto v : order) {
      if (v == start || !compatible_with_all(g, set, v)) continue;
      std::vector<std::size_t> next = set;
      next.push_back(v);
      if (density(next) >= density(set) - 1e-12) set = std::move(next);
    }
    for (bool improved = true; improved;) {
      improved = false;
      const double d = density(set);
      for (auto v : order) {
        if (std::find(set.begin(), set.end(), v) != set.end()) continue;
        for (std::size_t drop = 0; drop <= set.size() && !improved; ++drop) {
          std::vector<std::size_t> next;
          for (std::size_t k = 0; k < set.size(); ++k) {
            if (k != drop) next.push_back(set[k]);
          }
          if (!compatible_with_all(g, next, v)) continue;
          next.push_back(v);
          if (density(next) > d + 1e-12) {
            set = std::move(next);
            improved = true;
          }
        }
        if (improved) break;
      }
    }
    const double d = density(set);
    if (better(d, set, best_d, best)) {
      best = set;
      best_d = d;
    }
  }
  std::sort(best.begin(), best.end());
  return best;
}

std::vector<std::size_t> solve_consistent_set(const ConsistencyGraph& g, SolverMode mode) {
  switch (mode) {
    case SolverMode::Relaxed:
      return solve_relaxed(g);
    case SolverMode::Exact:
    case SolverMode::Auto:
      return g.size() <= kExactSolverCutoff ? solve_exact(g) : solve_relaxed(g);
  }
  return {};
}

bool has_id_conflict(const Ltem& m_c, const Ltem& m_p, const std::vector<Association>& associations,
                     std::span<const std::size_t> consistent_set, double epsilon, double r_merge) {
  std::vector<bool> anchor_c(m_c.entities.size(), false);
  std::vector<bool> anchor_p(m_p.entities.size(), false);
  for (auto a : consistent_set) {
    anchor_c[associations[a].entity_c] = true;
    anchor_p[associations[a].entity_p] = true;
  }
  auto equivalent = [&](std::size_t x, std::size_t y) {
    for (auto a : consistent_set) {
      const Vec3& ca = m_c.entities[associations[a].entity_c].position;
      const Vec3& pa = m_p.entities[associations[a].entity_p].position;
      const double dx = (m_c.entities[x].position - ca).norm();
      const double dy = (m_p.entities[y].position - pa).norm();
      if (std::abs(dx - dy) > epsilon) return false;
    }
    return true;
  };

  for (std::size_t x = 0; x < m_c.entities.size(); ++x) {
    if (anchor_c[x] || m_c.entities[x].category != TextCategory::ID) continue;
    std::vector<const std::string*> counterpart;
    for (std::size_t y = 0; y < m_p.entities.size(); ++y) {
      if (anchor_p[y] || m_p.entities[y].category != TextCategory::ID) continue;
      if (equivalent(x, y)) counterpart.push_back(&m_p.entities[y].content);
    }
    if (counterpart.empty()) continue;
    bool shared = false;
    for (std::size_t x2 = 0; x2 < m_c.entities.size() && !shared; ++x2) {
      const auto& e = m_c.entities[x2];
      if (e.category != TextCategory::ID) continue;
      if ((e.position - m_c.entities[x].position).norm() >= r_merge) continue;
      for (const auto* c : counterpart) {
        if (*c == e.content) {
          shared = true;
          break;
        }
      }
    }
    if (!shared) return true;
  }
  return false;
}

std::size_t distinct_locations(std::span<const Vec3> positions, double radius) {
  std::vector<Vec3> kept;
  for (const auto& p : positions) {
    const bool seen = std::any_of(kept.begin(), kept.end(),
                                  [&](const Vec3& q) { return (p - q).norm() <= radius; });
    if (!seen) kept.push_back(p);
  }
  return kept.size();
}

std::size_t aligned_count(const Ltem& m_c, const Ltem& m_p,
                          const std::vector<Association>& associations,
                          std::span<const std::size_t> consistent_set, const Pose& p_to_c,
                          const Vec3& pivot, double epsilon, double angle) {
  std::vector<Vec3> aligned;
  for (auto k : consistent_set) {
    const Vec3& c = m_c.entities[associations[k].entity_c].position;
    const Vec3 moved = p_to_c * m_p.entities[associations[k].entity_p].position;
    if ((moved - c).norm() <= epsilon + angle * (c - pivot).norm()) aligned.push_back(c);
  }
  return distinct_locations(aligned, epsilon);
}

bool ids_corroborate(const Ltem& m_c, const Ltem& m_p, const Pose& p_to_c, const Vec3& pivot,
                     double epsilon, double angle) {
  bool any_c = false;
  bool any_p = false;
  bool shared = false;
  for (const auto& ep : m_p.entities) any_p |= ep.category == TextCategory::ID;
  for (const auto& ec : m_c.entities) {
    if (ec.category != TextCategory::ID) continue;
    any_c = true;
    for (const auto& ep : m_p.entities) {
      if (ep.category != TextCategory::ID || ep.content != ec.content) continue;
      const double tol = epsilon + angle * (ec.position - pivot).norm();
      if ((p_to_c * ep.position - ec.position).norm() > tol) return false;
      shared = true;
    }
  }
  return shared || !any_c || !any_p;
}

VerificationResult verify_maps(const Ltem& m_c, const Ltem& m_p, std::size_t entity_c,
                               std::size_t entity_p, const AssociationParams& params) {
  VerificationResult result;
  result.associations = putative_associations(m_c, m_p);
  if (result.associations.size() < params.min_consistent) return result;
  const auto g = build_consistency_graph(result.associations, m_c, m_p, params.epsilon);
  result.consistent_set = solve_consistent_set(g, params.solver);
  if (result.consistent_set.size() < params.min_consistent) return result;
  std::vector<Vec3> located;
  for (auto a : result.consistent_set) {
    located.push_back(m_c.entities[result.associations[a].entity_c].position);
  }
  if (distinct_locations(located, params.epsilon) < params.min_consistent) return result;
  const Association key{entity_c, entity_p};
  const bool contains_key = std::any_of(
      result.consistent_set.begin(), result.consistent_set.end(),
      [&](std::size_t a) { return result.associations[a] == key; });
  if (!contains_key) return result;
  if (params.id_conflict_check &&
      has_id_conflict(m_c, m_p, result.associations, result.consistent_set, params.epsilon,
                      params.r_merge)) {
    return result;
  }
  result.accepted = true;
  return result;
}

std::optional<MatchedPair> verify_candidate(const ObservationDatabase& db,
                                            std::span<const Pose> odometry,
                                            const ObservationRef& current,
                                            const ObservationRef& candidate,
                                            const AssociationParams& params) {
  const TravelDistance travel(odometry);
  const Ltem m_c = build_ltem(db, odometry, travel, current.frame, params.d_ltem,
                              LtemDirection::PastOnly, params.r_merge);
  const Ltem m_p = build_ltem(db, odometry, travel, candidate.frame, params.d_ltem,
                              LtemDirection::TwoSided, params.r_merge);
  const auto ec = m_c.find(current);
  const auto ep = m_p.find(candidate);
  if (!ec || !ep) return std::nullopt;
  const auto result = verify_maps(m_c, m_p, *ec, *ep, params);
  if (!result.accepted) return std::nullopt;
  MatchedPair pair;
  pair.current = current;
  pair.candidate = candidate;
  pair.pose_current = db.entities_in_frame(current.frame).at(current.index).pose;
  pair.pose_candidate = db.entities_in_frame(candidate.frame).at(candidate.index).pose;
  pair.consistent_count = result.consistent_set.size();
  return pair;
}

std::string consistency_graph_json(const ConsistencyGraph& g,
                                   const std::vector<Association>& associations) {
  Json nodes = Json::array();
  for (const auto& a : associations) nodes.push_back({{"c", a.entity_c}, {"p", a.entity_p}});
  Json affinity = Json::array();
  Json exclusion = Json::array();
  for (Eigen::Index i = 0; i < g.affinity.rows(); ++i) {
    Json row = Json::array();
    Json mask = Json::array();
    for (Eigen::Index j = 0; j < g.affinity.cols(); ++j) {
      row.push_back(g.affinity(i, j));
      mask.push_back(static_cast<bool>(g.exclusion(i, j)));
    }
    affinity.push_back(std::move(row));
    exclusion.push_back(std::move(mask));
  }
  return Json{{"nodes", nodes}, {"affinity", affinity}, {"exclusion", exclusion}}.dump();
}

}  // namespace textlcd
