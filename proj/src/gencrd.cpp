#include "crdext/gencrd.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

#include "crdext/error.hpp"
#include "crdext/implyfalse.hpp"

namespace crdext {

std::uint64_t call_bound(std::size_t m) {
  if (m == 0 || m > 63) throw Error(ErrorKind::Domain, "call_bound needs 1 <= m <= 63");
  return (std::uint64_t{1} << m) - 1;
}

namespace {

// ImplyFalse only reasons about equality joins; dropping inequality joins
// keeps the verdict sound.
bool contradictory(const ConjunctiveQuery& q) {
  if (!q.has_inequality_join()) return imply_false(q);
  ConjunctiveQuery relaxed = q;
  std::erase_if(relaxed.joins, [](const JoinAtom& j) { return !j.is_equality(); });
  return imply_false(relaxed);
}

template <typename Leaf>
class Recursion {
 public:
  Recursion(const GenCrdOptions& opts, GenCrdStats& stats, Leaf& leaf) : opts_(opts), stats_(stats), leaf_(leaf) {}

  double run(const std::vector<ConjunctiveQuery>& list, std::size_t depth) {
    stats_.recursion_depth = std::max(stats_.recursion_depth, depth);
    if (list.size() == 1) {
      if (opts_.use_implyfalse && contradictory(list.front())) {
        ++stats_.pruned_by_implyfalse;
        return 0.0;
      }
      ++stats_.estimator_calls;
      return leaf_(list.front());
    }
    std::vector<ConjunctiveQuery> head{list.front()};
    std::vector<ConjunctiveQuery> rest(list.begin() + 1, list.end());
    std::vector<ConjunctiveQuery> updated;
    updated.reserve(rest.size());
    for (const auto& q : rest) updated.push_back(intersect(q, list.front()));
    // Evaluation order is fixed: head, rest, updated.
    double a = run(head, depth + 1);
    double b = run(rest, depth + 1);
    double c = run(updated, depth + 1);
    return a + b - c;
  }

 private:
  const GenCrdOptions& opts_;
  GenCrdStats& stats_;
  Leaf& leaf_;
};

template <typename Leaf>
double recurse(const DnfList& list, const GenCrdOptions& opts, GenCrdStats& stats, Leaf& leaf) {
  Recursion<Leaf> r(opts, stats, leaf);
  return r.run(list.queries, 1);
}

}  // namespace

GenCrdResult gen_crd(const DnfList& list, const Estimator& est, const GenCrdOptions& opts) {
  if (list.queries.empty()) throw Error(ErrorKind::Domain, "empty DNF list");
  GenCrdResult out;
  out.stats.dnf_size = list.size();

  if (!opts.parallel) {
    auto leaf = [&](const ConjunctiveQuery& q) { return checked_estimate(est, q); };
    out.estimate = recurse(list, opts, out.stats, leaf);
  } else {
    if (!est.capabilities().thread_safe)
      throw Error(ErrorKind::Capability, est.name() + " is not thread-safe; parallel mode unavailable");
    // Pass 1: collect base-case queries in recursion order.
    std::vector<ConjunctiveQuery> leaves;
    auto collect = [&](const ConjunctiveQuery& q) {
      leaves.push_back(q);
      return 0.0;
    };
    GenCrdStats scratch;
    recurse(list, opts, scratch, collect);

    // Pass 2: estimate concurrently into fixed slots.
    std::vector<double> values(leaves.size(), 0.0);
    std::vector<std::exception_ptr> errors(leaves.size());
    unsigned workers = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(1, leaves.size())));
    std::atomic<std::size_t> next{0};
    auto work = [&] {
      for (std::size_t i; (i = next.fetch_add(1)) < leaves.size();) {
        try {
          values[i] = checked_estimate(est, leaves[i]);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);

    // Pass 3: replay the same arithmetic tree.
    std::size_t cursor = 0;
    auto replay = [&](const ConjunctiveQuery&) { return values[cursor++]; };
    out.estimate = recurse(list, opts, out.stats, replay);
  }
  out.estimate = std::max(0.0, out.estimate);
  return out;
}

GenCrdResult gen_crd(const QueryAst& q, const Schema& schema, const Estimator& est, const GenCrdOptions& opts) {
  return gen_crd(get_dnf_list(q, schema, opts.dnf_cap), est, opts);
}

}  // namespace crdext
