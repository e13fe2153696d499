#include <map>

#include "lars/engine/annotation.hpp"
#include "lars/error.hpp"
#include "unify.hpp"

namespace lars::engine {

namespace {

struct Partial {
  Substitution sigma;
  Annotation annotation;
};

std::vector<Partial> base(const Atom& pattern, const Database& db) {
  std::vector<Partial> out;
  for (const auto& entry : db.entries()) {
    Substitution sigma;
    if (detail::unify(pattern, entry.atom, sigma)) out.push_back(Partial{std::move(sigma), entry.annotation});
  }
  return out;
}

std::vector<Partial> quantified(const ExtendedAtom& alpha, const Database& db, Time tb, Time te) {
  auto inner = base(alpha.atom, db);
  std::vector<Partial> out;
  switch (alpha.quantifier) {
    case Quantifier::None:
      return inner;
    case Quantifier::Diamond:
      for (auto& p : inner) out.push_back(Partial{p.sigma, Annotation{p.annotation.c, kInfinity, p.annotation.cc}});
      return out;
    case Quantifier::At:
      for (auto& p : inner) {
        Time lo = std::max(p.annotation.c, tb);
        Time hi = std::min(p.annotation.h, te);
        for (Time u = lo; u <= hi; ++u) {
          Substitution sigma = p.sigma;
          if (detail::bind_time(*alpha.time, u, sigma)) {
            out.push_back(Partial{std::move(sigma), Annotation{p.annotation.c, kInfinity, p.annotation.cc}});
          }
          if (u == kInfinity) break;
        }
      }
      return out;
    case Quantifier::Box: {
      // Per grounding, the annotations must chain (on discrete time points)
      // over the whole of [tb, te].
      std::map<Substitution, std::vector<Annotation>> by_sigma;
      for (auto& p : inner) by_sigma[p.sigma].push_back(p.annotation);
      for (auto& [sigma, anns] : by_sigma) {
        std::sort(anns.begin(), anns.end());
        if (anns.front().c > tb) continue;
        Time reach = anns.front().h;
        for (const auto& a : anns) {
          if (reach != kInfinity && a.c > reach + 1) break;
          reach = std::max(reach, a.h);
        }
        if (reach >= te) out.push_back(Partial{sigma, Annotation::at(te)});
      }
      return out;
    }
  }
  return out;
}

}  // namespace

std::vector<AnnotatedFormula> grd(const ExtendedAtom& alpha, const Database& db, Time tb, Time te) {
  if (tb > te) throw DomainError("grd needs tb <= te");
  if (!alpha.is_positive()) throw ContractViolation("grd handles positive formulae only");

  std::vector<Partial> parts;
  if (!alpha.window) {
    parts = quantified(alpha, db, tb, te);
  } else if (alpha.window->kind == WindowKind::Time) {
    const std::uint64_t n = alpha.window->size;
    parts = quantified(alpha, db, std::max(tb, te >= n ? te - n : 0), te);
    for (auto& p : parts) p.annotation.h = std::min(saturating_add(p.annotation.c, n), p.annotation.h);
  } else {
    const std::uint64_t n = alpha.window->size;
    parts = quantified(alpha, db, tb, te);
    for (auto& p : parts) {
      if (p.annotation.has_count()) p.annotation.hc = std::min(saturating_add(p.annotation.cc, n - 1), p.annotation.hc);
    }
  }

  std::vector<AnnotatedFormula> out;
  for (auto& p : parts) {
    if (p.annotation.c > p.annotation.h) continue;
    // A windowed grounding whose horizon passed before te no longer matters.
    if (alpha.window && p.annotation.h < te) continue;
    out.push_back(AnnotatedFormula{apply_substitution(alpha, p.sigma), std::move(p.sigma), p.annotation});
  }
  return out;
}

}  // namespace lars::engine
