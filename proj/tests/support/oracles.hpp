#pragma once

// Test-side reference computations. These deliberately avoid the library's
// own helpers (no log-domain code, no shared softmax) so that agreement is
// evidence rather than tautology.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fcp::testing {

// Evaluates "a op b mod m = ?" from its rendered text.
inline int modular_answer(const std::string& text) {
  std::istringstream in(text);
  int a = 0, b = 0, m = 0;
  std::string op, mod;
  in >> a >> op >> b >> mod >> m;
  long v = op == "+" ? a + b : op == "-" ? a - b : static_cast<long>(a) * b;
  return static_cast<int>(((v % m) + m) % m);
}

// Applies "reverse w o r d = ?" / "upper w o r d = ?" to the letters.
inline std::string string_answer(const std::string& text) {
  std::istringstream in(text);
  std::string verb, tok, out;
  in >> verb;
  std::vector<std::string> letters;
  while (in >> tok && tok != "=") letters.push_back(tok);
  if (verb == "reverse") {
    for (auto it = letters.rbegin(); it != letters.rend(); ++it) out += (out.empty() ? "" : " ") + *it;
  } else {
    for (auto& l : letters) out += (out.empty() ? "" : " ") + std::string(1, static_cast<char>(l[0] - 'a' + 'A'));
  }
  return out;
}

// Plain linear-domain Bayes rule.
inline std::vector<double> brute_posterior(const std::vector<double>& prior, const std::vector<std::vector<double>>& lik,
                                           std::size_t c) {
  std::vector<double> post(prior.size());
  double z = 0.0;
  for (std::size_t o = 0; o < prior.size(); ++o) z += prior[o] * lik[o][c];
  for (std::size_t o = 0; o < prior.size(); ++o) post[o] = prior[o] * lik[o][c] / z;
  return post;
}

inline double brute_kl(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) s += p[i] * std::log(p[i] / q[i]);
  }
  return s;
}

inline double brute_tv(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::fabs(p[i] - q[i]);
  return s / 2.0;
}

struct RandomTable {
  std::vector<double> prior;
  std::vector<std::vector<double>> lik;
};

// Strictly positive random prior and likelihood rows (each row sums to 1 up to
// the last entry absorbing rounding).
inline RandomTable random_table(std::size_t nr, std::size_t nf, std::mt19937_64& g) {
  std::uniform_real_distribution<double> u(0.01, 1.0);
  RandomTable t;
  double s = 0.0;
  for (std::size_t o = 0; o < nr; ++o) s += t.prior.emplace_back(u(g));
  for (double& p : t.prior) p /= s;
  for (std::size_t o = 0; o < nr; ++o) {
    std::vector<double> row(nf);
    double z = 0.0;
    for (double& v : row) z += (v = u(g));
    for (double& v : row) v /= z;
    double head = 0.0;
    for (std::size_t c = 0; c + 1 < nf; ++c) head += row[c];
    row[nf - 1] = 1.0 - head;
    t.lik.push_back(row);
  }
  return t;
}

inline std::vector<double> random_distribution(std::size_t n, std::mt19937_64& g) {
  std::uniform_real_distribution<double> u(0.001, 1.0);
  std::vector<double> p(n);
  double s = 0.0;
  for (double& v : p) s += (v = u(g));
  for (double& v : p) v /= s;
  return p;
}

// Central finite difference of f at x[i].
inline double central_difference(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
                                 std::size_t i, double h) {
  const double x0 = x[i];
  x[i] = x0 + h;
  const double up = f(x);
  x[i] = x0 - h;
  const double down = f(x);
  return (up - down) / (2.0 * h);
}

// Pearson chi-square statistic and the upper-tail p-value by the
// Wilson-Hilferty normal approximation.
inline double chi_square_p_value(const std::vector<double>& expected_probs, const std::vector<std::size_t>& counts) {
  std::size_t n = 0;
  for (auto c : counts) n += c;
  double stat = 0.0;
  std::size_t dof = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double e = expected_probs[i] * static_cast<double>(n);
    if (e <= 0.0) continue;
    stat += (static_cast<double>(counts[i]) - e) * (static_cast<double>(counts[i]) - e) / e;
    ++dof;
  }
  const double k = static_cast<double>(dof - 1);
  const double z = (std::cbrt(stat / k) - (1.0 - 2.0 / (9.0 * k))) / std::sqrt(2.0 / (9.0 * k));
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

}  // namespace fcp::testing
