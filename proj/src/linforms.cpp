#include "narrowlab/linforms.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include "narrowlab/errors.hpp"

namespace narrowlab {

namespace {

std::vector<Rational> augmented(const LinearForm& f) {
  std::vector<Rational> row;
  row.reserve(f.dim() + 1);
  for (auto c : f.coeffs) row.emplace_back(static_cast<long>(c));
  row.emplace_back(static_cast<long>(f.constant));
  return row;
}

std::string term_string(const Rational& c, const std::string& name, bool first) {
  std::ostringstream os;
  const bool neg = sgn(c) < 0;
  const Rational a = abs(c);
  if (first) {
    if (neg) os << "-";
  } else {
    os << (neg ? " - " : " + ");
  }
  if (name.empty()) {
    os << a.get_str();
  } else {
    if (a != 1) os << a.get_str();
    os << name;
  }
  return os.str();
}

std::vector<std::string> default_names(std::size_t d) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < d; ++i) names.push_back("s" + std::to_string(i + 1));
  return names;
}

int factorial(int k) {
  int f = 1;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

std::vector<std::string> doubled_names(int k) {
  std::vector<std::string> names;
  for (int i = 1; i <= k; ++i) names.push_back("x" + std::to_string(i));
  for (int i = 1; i <= k; ++i) names.push_back("y" + std::to_string(i));
  return names;
}

bool better(std::size_t merges, std::size_t codim, const Rational& best) {
  return ratio_of(merges, codim) > best;
}

}  // namespace

__int128 LinearForm::evaluate(std::span<const std::int64_t> x) const {
  if (x.size() != coeffs.size()) throw DomainError("point dimension does not match form");
  __int128 v = constant;
  for (std::size_t i = 0; i < x.size(); ++i) {
    __int128 term = 0;
    if (__builtin_mul_overflow(static_cast<__int128>(coeffs[i]), static_cast<__int128>(x[i]), &term) ||
        __builtin_add_overflow(v, term, &v)) {
      throw DomainError("linear form evaluation overflows 128 bits");
    }
  }
  return v;
}

LinearSystem::LinearSystem(std::size_t dim, std::vector<LinearForm> forms, std::vector<std::string> variable_names)
    : dim_(dim), forms_(std::move(forms)), names_(std::move(variable_names)) {
  if (dim_ == 0) throw DomainError("linear system needs at least one variable");
  if (forms_.empty()) throw DomainError("linear system needs at least one form");
  for (std::size_t i = 0; i < forms_.size(); ++i) {
    if (forms_[i].dim() != dim_) {
      throw DomainError("form " + std::to_string(i) + " has " + std::to_string(forms_[i].dim()) +
                        " coefficients, expected " + std::to_string(dim_));
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (forms_[i] == forms_[j]) {
        throw DomainError("forms " + std::to_string(j) + " and " + std::to_string(i) + " are identical");
      }
    }
  }
  if (names_.empty()) names_ = default_names(dim_);
  if (names_.size() != dim_) throw DomainError("variable name count does not match dimension");
}

std::string LinearSystem::describe(std::size_t i) const {
  const LinearForm& f = forms_.at(i);
  std::string s;
  bool first = true;
  for (std::size_t v = 0; v < dim_; ++v) {
    if (f.coeffs[v] == 0) continue;
    s += term_string(Rational(static_cast<long>(f.coeffs[v])), names_[v], first);
    first = false;
  }
  if (f.constant != 0 || first) s += term_string(Rational(static_cast<long>(f.constant)), "", first);
  return s;
}

std::string LinearSystem::to_text() const {
  std::ostringstream os;
  for (const auto& f : forms_) {
    os << f.constant << ";";
    for (auto c : f.coeffs) os << " " << c;
    os << "\n";
  }
  return os.str();
}

LinearSystem LinearSystem::from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<LinearForm> forms;
  std::size_t lineno = 0;
  std::optional<std::size_t> dim;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto semi = line.find(';');
    if (semi == std::string::npos) {
      throw DomainError("line " + std::to_string(lineno) + ": expected 'constant; coefficients'");
    }
    LinearForm f;
    std::istringstream cpart(line.substr(0, semi)), rest(line.substr(semi + 1));
    if (!(cpart >> f.constant)) throw DomainError("line " + std::to_string(lineno) + ": bad constant");
    std::string extra;
    if (cpart >> extra) throw DomainError("line " + std::to_string(lineno) + ": junk before ';'");
    std::string tok;
    while (rest >> tok) {
      std::size_t used = 0;
      long long v = 0;
      try {
        v = std::stoll(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) throw DomainError("line " + std::to_string(lineno) + ": bad coefficient '" + tok + "'");
      f.coeffs.push_back(v);
    }
    if (!dim) dim = f.coeffs.size();
    if (f.coeffs.size() != *dim) {
      throw DomainError("line " + std::to_string(lineno) + ": expected " + std::to_string(*dim) + " coefficients");
    }
    forms.push_back(std::move(f));
  }
  if (!dim) throw DomainError("system text contains no forms");
  return LinearSystem(*dim, std::move(forms));
}

void FormPartition::validate(std::size_t t) const {
  std::vector<int> seen(t, 0);
  for (const auto& atom : atoms) {
    if (atom.empty()) throw DomainError("partition has an empty atom");
    for (auto i : atom) {
      if (i >= t) throw DomainError("partition index " + std::to_string(i) + " out of range for t = " + std::to_string(t));
      if (seen[i]++) throw DomainError("partition index " + std::to_string(i) + " appears twice");
    }
  }
  for (std::size_t i = 0; i < t; ++i) {
    if (!seen[i]) throw DomainError("partition does not cover index " + std::to_string(i));
  }
}

FormPartition FormPartition::discrete(std::size_t t) {
  FormPartition p;
  for (std::size_t i = 0; i < t; ++i) p.atoms.push_back({i});
  return p;
}

FormPartition FormPartition::from_labels(std::span<const std::size_t> labels) {
  std::map<std::size_t, std::size_t> slot;
  FormPartition p;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, fresh] = slot.emplace(labels[i], p.atoms.size());
    if (fresh) p.atoms.emplace_back();
    p.atoms[it->second].push_back(i);
  }
  return p;
}

Subspace::Subspace(std::size_t dim) : dim_(dim) {}

std::vector<Rational> Subspace::reduce(std::vector<Rational> row) const {
  if (row.size() != dim_ + 1) throw DomainError("row length does not match subspace dimension");
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    const std::size_t p = pivots_[r];
    if (sgn(row[p]) == 0) continue;
    const Rational f = row[p];
    for (std::size_t c = p; c <= dim_; ++c) {
      if (sgn(rows_[r][c]) != 0) row[c] -= f * rows_[r][c];
    }
  }
  return row;
}

bool Subspace::implies(const std::vector<Rational>& row) const {
  const auto rem = reduce(row);
  return std::all_of(rem.begin(), rem.end(), [](const Rational& q) { return sgn(q) == 0; });
}

Subspace Subspace::with(const std::vector<Rational>& row) const {
  Subspace out = *this;
  if (!feasible_) return out;
  auto rem = reduce(row);
  std::size_t p = 0;
  while (p < dim_ && sgn(rem[p]) == 0) ++p;
  if (p == dim_) {
    if (sgn(rem[dim_]) != 0) {
      out.feasible_ = false;
      out.rows_.clear();
      out.pivots_.clear();
    }
    return out;
  }
  const Rational lead = rem[p];
  for (std::size_t c = p; c <= dim_; ++c) rem[c] /= lead;
  for (auto& r : out.rows_) {
    if (sgn(r[p]) == 0) continue;
    const Rational f = r[p];
    for (std::size_t c = p; c <= dim_; ++c) r[c] -= f * rem[c];
  }
  const auto pos = std::upper_bound(out.pivots_.begin(), out.pivots_.end(), p) - out.pivots_.begin();
  out.pivots_.insert(out.pivots_.begin() + pos, p);
  out.rows_.insert(out.rows_.begin() + pos, std::move(rem));
  return out;
}

std::string Subspace::key() const {
  if (!feasible_) return "empty";
  std::string k;
  for (const auto& r : rows_) {
    for (const auto& q : r) {
      k += q.get_str();
      k += ',';
    }
    k += '|';
  }
  return k;
}

std::string Subspace::describe(const std::vector<std::string>& names) const {
  if (!feasible_) return "(empty)";
  if (rows_.empty()) return "(whole space)";
  const auto nm = names.empty() ? default_names(dim_) : names;
  std::string s;
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    if (r) s += ", ";
    // scale to a primitive integer row for display
    BigInt l = 1;
    for (const auto& q : rows_[r]) l = lcm(l, BigInt(q.get_den()));
    bool first = true;
    std::string lhs;
    for (std::size_t c = 0; c < dim_; ++c) {
      if (sgn(rows_[r][c]) == 0) continue;
      lhs += term_string(Rational(rows_[r][c] * l), nm[c], first);
      first = false;
    }
    const Rational rhs = -rows_[r][dim_] * l;
    s += lhs + " = " + rhs.get_str();
  }
  return s;
}

std::vector<Rational> difference_row(const LinearForm& a, const LinearForm& b) {
  if (a.dim() != b.dim()) throw DomainError("forms of different dimension");
  std::vector<Rational> row;
  row.reserve(a.dim() + 1);
  for (std::size_t i = 0; i < a.dim(); ++i) row.emplace_back(static_cast<long>(a.coeffs[i] - b.coeffs[i]));
  row.emplace_back(static_cast<long>(a.constant - b.constant));
  return row;
}

Subspace partition_flat(const LinearSystem& sys, const FormPartition& pi) {
  pi.validate(sys.size());
  Subspace s(sys.dim());
  for (const auto& atom : pi.atoms) {
    for (std::size_t k = 1; k < atom.size(); ++k) {
      s = s.with(difference_row(sys[atom[k]], sys[atom[0]]));
      if (!s.feasible()) return s;
    }
  }
  return s;
}

FormPartition induced_partition(const LinearSystem& sys, const Subspace& flat) {
  if (!flat.feasible()) throw DomainError("induced partition of an empty flat");
  std::map<std::vector<Rational>, std::size_t> classes;
  std::vector<std::size_t> labels(sys.size());
  for (std::size_t i = 0; i < sys.size(); ++i) {
    auto rem = flat.reduce(augmented(sys[i]));
    labels[i] = classes.emplace(std::move(rem), classes.size()).first->second;
  }
  return FormPartition::from_labels(labels);
}

std::optional<std::size_t> codim_of_partition(const LinearSystem& sys, const FormPartition& pi) {
  const Subspace s = partition_flat(sys, pi);
  if (!s.feasible()) return std::nullopt;
  return s.codim();
}

LinearForm psi_j(int k, int j) {
  if (k < 2) throw DomainError("k must be at least 2");
  if (j < 1 || j > k) throw DomainError("j = " + std::to_string(j) + " outside 1.." + std::to_string(k));
  LinearForm f;
  for (int i = 1; i <= k; ++i) f.coeffs.push_back(j - i);
  return f;
}

LinearSystem first_family(int k) {
  if (k < 2) throw DomainError("first family needs k >= 2");
  std::vector<LinearForm> forms;
  for (int j = 1; j <= k; ++j) {
    const LinearForm base = psi_j(k, j);
    // omega ranges over {0,1}^{[k]\{j}}; the lowest free index is the most significant bit
    std::vector<int> free;
    for (int i = 1; i <= k; ++i) {
      if (i != j) free.push_back(i);
    }
    const int nfree = static_cast<int>(free.size());
    for (int mask = 0; mask < (1 << nfree); ++mask) {
      LinearForm f;
      f.coeffs.assign(2 * k, 0);
      for (int b = 0; b < nfree; ++b) {
        const int i = free[b];
        const int omega = (mask >> (nfree - 1 - b)) & 1;
        f.coeffs[omega * k + (i - 1)] = base.coeffs[i - 1];
      }
      forms.push_back(std::move(f));
    }
  }
  return LinearSystem(2 * k, std::move(forms), doubled_names(k));
}

LinearSystem second_family(int k) {
  if (k < 2) throw DomainError("second family needs k >= 2");
  if (k > 12) throw DomainError("second family with k > 12 is out of range");
  const int kf = factorial(k);
  std::vector<LinearForm> forms;
  for (int mask = 0; mask < (1 << k); ++mask) {
    LinearForm f;
    f.coeffs.assign(2 * k, 0);
    for (int i = 0; i < k; ++i) {
      const int omega = (mask >> (k - 1 - i)) & 1;
      f.coeffs[omega * k + i] = kf;
    }
    forms.push_back(std::move(f));
  }
  return LinearSystem(2 * k, std::move(forms), doubled_names(k));
}

LinearSystem third_family(int k, int j) {
  if (k < 2) throw DomainError("third family needs k >= 2");
  if (j < 1 || j > k) throw DomainError("j = " + std::to_string(j) + " outside 1.." + std::to_string(k));
  std::vector<LinearForm> forms;
  forms.push_back(LinearForm{{0, 0}, 0});
  for (int tau = 0; tau < 2; ++tau) {
    for (int i = 1; i <= k; ++i) {
      if (i == j) continue;
      LinearForm f{{0, 0}, 0};
      f.coeffs[tau] = i - j;
      forms.push_back(std::move(f));
    }
  }
  return LinearSystem(2, std::move(forms), {"d0", "d1"});
}

std::vector<std::vector<Rational>> difference_kernels(const LinearSystem& sys) {
  std::vector<std::vector<Rational>> out;
  std::set<std::string> seen;
  const std::size_t t = sys.size();
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t j = i + 1; j < t; ++j) {
      const Subspace h = Subspace(sys.dim()).with(difference_row(sys[i], sys[j]));
      if (!h.feasible()) continue;
      if (seen.insert(h.key()).second) out.push_back(h.rows().front());
    }
  }
  return out;
}

std::vector<Subspace> closure_lattice(const LinearSystem& sys, std::size_t max_subspaces) {
  const auto kernels = difference_kernels(sys);
  std::vector<Subspace> out{Subspace(sys.dim())};
  std::unordered_set<std::string> seen{out.front().key()};
  std::size_t begin = 0;
  while (begin < out.size()) {
    const std::size_t end = out.size();
    for (std::size_t i = begin; i < end; ++i) {
      for (const auto& h : kernels) {
        if (out[i].implies(h)) continue;
        Subspace u = out[i].with(h);
        if (!u.feasible() || !seen.insert(u.key()).second) continue;
        if (out.size() >= max_subspaces) {
          throw ResourceError("closure lattice exceeds " + std::to_string(max_subspaces) + " subspaces", out.size() + 1);
        }
        out.push_back(std::move(u));
      }
    }
    begin = end;
  }
  return out;
}

LIndexResult lindex(const LinearSystem& sys, const LIndexOptions& options) {
  const std::size_t t = sys.size();
  if (t < 2) throw DomainError("L(Psi) needs at least two forms");
  const auto kernels = difference_kernels(sys);

  LIndexResult res;
  res.value = 0;
  if (kernels.empty()) return res;  // every merge is inconsistent
  res.value = 1;                     // merging one consistent pair

  std::unordered_set<std::string> seen;
  std::vector<Subspace> frontier{Subspace(sys.dim())};
  seen.insert(frontier.front().key());

  for (std::size_t level = 1; level <= sys.dim(); ++level) {
    // ratios at this codimension are at most (t-1)/level
    if (!better(t - 1, level, res.value) && res.witness) break;
    std::vector<Subspace> next;
    for (const auto& v : frontier) {
      for (const auto& h : kernels) {
        if (v.implies(h)) continue;
        Subspace u = v.with(h);
        if (!u.feasible()) continue;
        if (!seen.insert(u.key()).second) continue;
        if (seen.size() > options.max_subspaces) {
          throw ResourceError("closure lattice exceeds " + std::to_string(options.max_subspaces) +
                                  " subspaces; lower the codimension cap or raise max_subspaces",
                              seen.size());
        }
        const FormPartition pi = induced_partition(sys, u);
        const std::size_t merges = t - pi.size();
        if (!res.witness || better(merges, level, res.value)) {
          res.value = ratio_of(merges, level);
          res.witness = pi;
          res.witness_codim = level;
          res.witness_merges = merges;
          res.witness_flat = u;
        }
        next.push_back(std::move(u));
      }
    }
    frontier = std::move(next);
    if (frontier.empty()) break;
  }
  res.subspaces_explored = seen.size() - 1;
  return res;
}

LIndexResult lindex_bruteforce(const LinearSystem& sys) {
  const std::size_t t = sys.size();
  if (t < 2) throw DomainError("L(Psi) needs at least two forms");
  if (t > 8) throw UnsupportedError("brute-force L(Psi) is limited to t <= 8 forms");
  LIndexResult res;
  res.value = 0;
  for_each_set_partition(t, [&](std::span<const std::size_t> labels) {
    const FormPartition pi = FormPartition::from_labels(labels);
    ++res.subspaces_explored;
    if (pi.size() == t) return;
    const Subspace s = partition_flat(sys, pi);
    if (!s.feasible()) return;
    const std::size_t merges = t - pi.size();
    if (!res.witness || better(merges, s.codim(), res.value)) {
      res.value = ratio_of(merges, s.codim());
      res.witness = pi;
      res.witness_codim = s.codim();
      res.witness_merges = merges;
      res.witness_flat = s;
    }
  });
  return res;
}

MinDistinctResult min_distinct_on_codim(const LinearSystem& sys, int c) {
  if (c != 1 && c != 2) throw DomainError("codimension must be 1 or 2");
  const std::size_t t = sys.size();
  const std::size_t d = sys.dim();
  MinDistinctResult res;
  res.min_count = t;  // a generic subspace separates every pair
  if (d < static_cast<std::size_t>(c)) throw DomainError("codimension exceeds the number of variables");

  const auto kernels = difference_kernels(sys);
  std::vector<Subspace> hyperplanes;
  for (const auto& h : kernels) hyperplanes.push_back(Subspace(d).with(h));

  auto consider = [&](const Subspace& s) {
    ++res.candidates;
    const std::size_t count = induced_partition(sys, s).size();
    if (count < res.min_count || (!res.witness && count == res.min_count && count < t)) {
      res.min_count = count;
      res.witness = s;
    }
  };

  // a codim-2 subspace inside a single kernel behaves like that kernel
  for (const auto& h : hyperplanes) consider(h);
  if (c == 2) {
    std::unordered_set<std::string> seen;
    for (std::size_t a = 0; a < hyperplanes.size(); ++a) {
      for (std::size_t b = a + 1; b < kernels.size(); ++b) {
        Subspace u = hyperplanes[a].with(kernels[b]);
        if (!u.feasible() || u.codim() != 2) continue;
        if (!seen.insert(u.key()).second) continue;
        consider(u);
      }
    }
  }
  return res;
}

namespace {

// Bareiss fraction-free determinant.
BigInt determinant(std::vector<std::vector<BigInt>> m) {
  const std::size_t n = m.size();
  if (n == 0) return 1;
  BigInt prev = 1;
  int sign = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (m[k][k] == 0) {
      std::size_t r = k + 1;
      while (r < n && m[r][k] == 0) ++r;
      if (r == n) return 0;
      std::swap(m[k], m[r]);
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      for (std::size_t j = k + 1; j < n; ++j) {
        m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
      }
    }
    prev = m[k][k];
  }
  return sign * m[n - 1][n - 1];
}

}  // namespace

SolutionLattice solution_lattice(const LinearSystem& sys, const FormPartition& pi) {
  if (!partition_flat(sys, pi).feasible()) {
    throw DomainError("partition has an inconsistent affine part (empty flat)");
  }
  const std::size_t d = sys.dim();
  std::vector<std::vector<BigInt>> A;
  std::vector<BigInt> c;
  for (const auto& atom : pi.atoms) {
    for (std::size_t k = 1; k < atom.size(); ++k) {
      const auto& f = sys[atom[k]];
      const auto& g = sys[atom[0]];
      std::vector<BigInt> row(d);
      for (std::size_t v = 0; v < d; ++v) row[v] = BigInt(static_cast<long>(f.coeffs[v] - g.coeffs[v]));
      A.push_back(std::move(row));
      c.emplace_back(static_cast<long>(f.constant - g.constant));
    }
  }
  // U starts as the identity; column operations keep A*U and U in step.
  std::vector<std::vector<BigInt>> U(d, std::vector<BigInt>(d, 0));
  for (std::size_t i = 0; i < d; ++i) U[i][i] = 1;
  auto combine = [&](std::size_t p, std::size_t q, const BigInt& s, const BigInt& t, const BigInt& u,
                     const BigInt& v) {
    // col_p <- s col_p + t col_q ; col_q <- u col_p + v col_q
    for (auto* M : {&A, &U}) {
      for (auto& row : *M) {
        const BigInt x = row[p], y = row[q];
        row[p] = s * x + t * y;
        row[q] = u * x + v * y;
      }
    }
  };
  std::size_t col = 0;
  std::vector<std::pair<std::size_t, std::size_t>> pivot_rows;  // (row, column)
  for (std::size_t i = 0; i < A.size() && col < d; ++i) {
    for (std::size_t j = col + 1; j < d; ++j) {
      if (A[i][j] == 0) continue;
      const BigInt a = A[i][col], b = A[i][j];
      BigInt g, s, t;
      mpz_gcdext(g.get_mpz_t(), s.get_mpz_t(), t.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
      combine(col, j, s, t, BigInt(-b / g), BigInt(a / g));
    }
    if (A[i][col] != 0) {
      if (A[i][col] < 0) combine(col, col, -1, 0, 0, -1);
      pivot_rows.emplace_back(i, col);
      ++col;
    }
  }

  SolutionLattice out;
  out.dimension = d - col;
  for (std::size_t j = col; j < d; ++j) {
    std::vector<BigInt> v(d);
    for (std::size_t i = 0; i < d; ++i) v[i] = U[i][j];
    out.basis.push_back(std::move(v));
  }
  std::vector<std::vector<BigInt>> gram(out.dimension, std::vector<BigInt>(out.dimension, 0));
  for (std::size_t a = 0; a < out.dimension; ++a) {
    for (std::size_t b = 0; b < out.dimension; ++b) {
      for (std::size_t i = 0; i < d; ++i) gram[a][b] += out.basis[a][i] * out.basis[b][i];
    }
  }
  out.gram_determinant = determinant(gram);

  // A U is lower echelon in the pivot columns: solve (A U) y = -c by forward substitution.
  std::vector<BigInt> y(d, 0);
  bool integral = true;
  for (auto [i, p] : pivot_rows) {
    BigInt rhs = -c[i];
    for (std::size_t q = 0; q < p; ++q) rhs -= A[i][q] * y[q];
    if (rhs % A[i][p] != 0) {
      integral = false;
      break;
    }
    y[p] = rhs / A[i][p];
  }
  if (integral) {
    std::vector<BigInt> x(d, 0);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) x[i] += U[i][j] * y[j];
    }
    out.particular = std::move(x);
  }
  return out;
}

}  // namespace narrowlab
