#include "tpda/zone.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace tpda {

// ── Checked integer arithmetic ──

Int checked_add(Int a, Int b) {
    Int r;
    if (__builtin_add_overflow(a, b, &r)) throw std::overflow_error("integer overflow in addition");
    return r;
}

Int checked_mul(Int a, Int b) {
    Int r;
    if (__builtin_mul_overflow(a, b, &r)) throw std::overflow_error("integer overflow in multiplication");
    return r;
}

Int checked_neg(Int a) {
    if (a == INT64_MIN) throw std::overflow_error("integer overflow in negation");
    return -a;
}

// ── Bounds ──

void throw_bound_overflow() { throw std::overflow_error("bound constant too large"); }

Raw bound_negate(Raw b) {
    return make_bound(checked_neg(bound_value(b)), !bound_strict(b));
}

std::string bound_str(Raw b) {
    if (b == kInf) return "<inf";
    return std::string(bound_strict(b) ? "<" : "<=") + std::to_string(bound_value(b));
}

// ── Zone ──

Zone::Zone(std::size_t dim) : dim_(dim), m_(dim * dim, kInf) {
    for (std::size_t i = 0; i < dim; ++i) at(i, i) = kLeZero;
}

void Zone::add(std::size_t i, std::size_t j, Raw b) {
    Raw& cur = at(i, j);
    if (b < cur) {
        cur = b;
        closed_ = false;
    }
}

bool Zone::canonicalize() {
    if (empty_) return false;
    if (closed_) return true;
    const std::size_t d = dim_;
    for (std::size_t k = 0; k < d; ++k)
        for (std::size_t i = 0; i < d; ++i) {
            Raw ik = at(i, k);
            if (ik == kInf) continue;
            for (std::size_t j = 0; j < d; ++j) {
                Raw kj = at(k, j);
                if (kj == kInf) continue;
                Raw s = bound_add(ik, kj);
                if (s < at(i, j)) at(i, j) = s;
            }
        }
    closed_ = true;
    for (std::size_t i = 0; i < d; ++i)
        if (at(i, i) < kLeZero) {
            empty_ = true;
            return false;
        }
    return true;
}

bool Zone::constrain(std::size_t i, std::size_t j, Raw b) {
    if (empty_) return false;
    if (!closed_) {
        add(i, j, b);
        return canonicalize();
    }
    if (b >= at(i, j)) return true;
    // x_j - x_i bound plus b must be nonnegative
    if (at(j, i) != kInf && bound_add(at(j, i), b) < kLeZero) {
        empty_ = true;
        return false;
    }
    at(i, j) = b;
    const std::size_t d = dim_;
    for (std::size_t p = 0; p < d; ++p) {
        Raw pi = at(p, i);
        if (pi == kInf) continue;
        Raw pj = bound_add(pi, b);
        for (std::size_t q = 0; q < d; ++q) {
            Raw jq = at(j, q);
            if (jq == kInf) continue;
            Raw s = bound_add(pj, jq);
            if (s < at(p, q)) at(p, q) = s;
        }
    }
    return true;
}

std::size_t Zone::add_var() {
    std::size_t nd = dim_ + 1;
    std::vector<Raw> nm(nd * nd, kInf);
    for (std::size_t i = 0; i < dim_; ++i)
        for (std::size_t j = 0; j < dim_; ++j) nm[i * nd + j] = at(i, j);
    nm[dim_ * nd + dim_] = kLeZero;
    m_ = std::move(nm);
    dim_ = nd;
    return nd - 1;
}

Zone Zone::restrict_to(const std::vector<std::size_t>& keep) const {
    Zone z(keep.size());
    z.empty_ = empty_;
    z.closed_ = closed_;
    for (std::size_t a = 0; a < keep.size(); ++a)
        for (std::size_t b = 0; b < keep.size(); ++b) z.at(a, b) = at(keep[a], keep[b]);
    return z;
}

Zone Zone::embed(std::size_t new_dim, const std::vector<std::size_t>& map) const {
    Zone z(new_dim);
    z.empty_ = empty_;
    for (std::size_t i = 0; i < dim_; ++i)
        for (std::size_t j = 0; j < dim_; ++j)
            if (i != j) z.add(map[i], map[j], at(i, j));
    // two old variables mapped to the same new one need a re-close
    std::vector<std::size_t> seen(map.begin(), map.end());
    std::sort(seen.begin(), seen.end());
    bool distinct = std::adjacent_find(seen.begin(), seen.end()) == seen.end();
    z.closed_ = closed_ && distinct;
    return z;
}

static bool satisfies(const Rational& diff, Raw b) {
    if (b == kInf) return true;
    Rational v(bound_value(b));
    return bound_strict(b) ? diff < v : diff <= v;
}

bool Zone::contains(const Point& p) const {
    if (empty_) return false;
    for (std::size_t i = 0; i < dim_; ++i)
        for (std::size_t j = 0; j < dim_; ++j)
            if (i != j && !satisfies(p[i] - p[j], at(i, j))) return false;
    return true;
}

bool Zone::includes(const Zone& o) const {
    if (o.empty_) return true;
    if (empty_) return false;
    for (std::size_t k = 0; k < m_.size(); ++k)
        if (o.m_[k] > m_[k]) return false;
    return true;
}

std::optional<Point> Zone::witness() const {
    Zone c = *this;
    if (!c.canonicalize()) return std::nullopt;
    const std::size_t d = dim_;
    if (d == 0) return Point{};
    // scale by d+1 so strict bounds become integer non-strict ones
    const Int s = static_cast<Int>(d) + 1;
    std::vector<Int> w(d * d, 0);
    std::vector<bool> fin(d * d, false);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            Raw b = c.at(i, j);
            if (b == kInf) continue;
            fin[i * d + j] = true;
            w[i * d + j] = checked_mul(s, bound_value(b)) - (bound_strict(b) ? 1 : 0);
        }
    for (std::size_t k = 0; k < d; ++k)
        for (std::size_t i = 0; i < d; ++i) {
            if (!fin[i * d + k]) continue;
            for (std::size_t j = 0; j < d; ++j) {
                if (!fin[k * d + j]) continue;
                Int v = checked_add(w[i * d + k], w[k * d + j]);
                if (!fin[i * d + j] || v < w[i * d + j]) {
                    w[i * d + j] = v;
                    fin[i * d + j] = true;
                }
            }
        }
    // x_i = min(0, min_j w(i,j)) satisfies x_i - x_j <= w(i,j)
    Point p(d);
    for (std::size_t i = 0; i < d; ++i) {
        Int v = 0;
        for (std::size_t j = 0; j < d; ++j)
            if (fin[i * d + j]) v = std::min(v, w[i * d + j]);
        p[i] = Rational(v, s);
        p[i].canonicalize();
    }
    return p;
}

Point Zone::sample(std::mt19937_64& rng, int spread) const {
    const std::size_t d = dim_;
    Point p(d);
    std::uniform_int_distribution<int> coin(0, 3);
    std::uniform_int_distribution<int> num(1, 15);
    auto rand_unit = [&]() {  // in (0,1)
        Rational r(num(rng), 16);
        r.canonicalize();
        return r;
    };
    for (std::size_t i = 0; i < d; ++i) {
        std::optional<Rational> lo, hi;
        bool lo_strict = false, hi_strict = false;
        for (std::size_t j = 0; j < i; ++j) {
            Raw up = at(i, j);  // x_i <= x_j + c
            if (up != kInf) {
                Rational v = p[j] + Rational(bound_value(up));
                if (!hi || v < *hi || (v == *hi && bound_strict(up))) {
                    hi = v;
                    hi_strict = bound_strict(up);
                }
            }
            Raw dn = at(j, i);  // x_j - x_i <= c  ->  x_i >= x_j - c
            if (dn != kInf) {
                Rational v = p[j] - Rational(bound_value(dn));
                if (!lo || v > *lo || (v == *lo && bound_strict(dn))) {
                    lo = v;
                    lo_strict = bound_strict(dn);
                }
            }
        }
        Rational x;
        if (lo && hi) {
            if (*lo == *hi) {
                x = *lo;
            } else {
                int c = coin(rng);
                if (c == 0 && !lo_strict) x = *lo;
                else if (c == 1 && !hi_strict) x = *hi;
                else x = *lo + (*hi - *lo) * rand_unit();
            }
        } else if (lo) {
            int c = coin(rng);
            x = (c == 0 && !lo_strict) ? *lo : *lo + Rational(spread) * rand_unit();
        } else if (hi) {
            int c = coin(rng);
            x = (c == 0 && !hi_strict) ? *hi : *hi - Rational(spread) * rand_unit();
        } else {
            std::uniform_int_distribution<int> base(-spread, spread);
            x = Rational(base(rng)) + (coin(rng) == 0 ? Rational(0) : rand_unit());
        }
        x.canonicalize();
        p[i] = x;
    }
    return p;
}

bool Zone::operator<(const Zone& o) const {
    if (dim_ != o.dim_) return dim_ < o.dim_;
    if (empty_ != o.empty_) return empty_ < o.empty_;
    return m_ < o.m_;
}

std::string Zone::str(const std::vector<std::string>& names) const {
    auto nm = [&](std::size_t i) { return i < names.size() ? names[i] : "x" + std::to_string(i + 1); };
    if (empty_) return "false";
    std::vector<std::string> atoms;
    for (std::size_t i = 0; i < dim_; ++i)
        for (std::size_t j = 0; j < dim_; ++j) {
            if (i == j) continue;
            Raw b = at(i, j);
            if (b == kInf) continue;
            Raw back = at(j, i);
            // print equality once
            if (!bound_strict(b) && back != kInf && !bound_strict(back) && bound_value(back) == -bound_value(b)) {
                if (i < j) atoms.push_back(nm(i) + " - " + nm(j) + " = " + std::to_string(bound_value(b)));
                continue;
            }
            atoms.push_back(nm(i) + " - " + nm(j) + (bound_strict(b) ? " < " : " <= ") + std::to_string(bound_value(b)));
        }
    if (atoms.empty()) return "true";
    std::string out;
    for (std::size_t k = 0; k < atoms.size(); ++k) out += (k ? " & " : "") + atoms[k];
    return out;
}

// ── Unions of zones ──

ZoneDNF ZoneDNF::top(std::size_t dim) { return ZoneDNF{dim, {Zone(dim)}}; }
ZoneDNF ZoneDNF::bottom(std::size_t dim) { return ZoneDNF{dim, {}}; }

ZoneDNF& ZoneDNF::canonicalize() {
    std::vector<Zone> keep;
    for (auto& z : disjuncts)
        if (z.canonicalize()) keep.push_back(z);
    std::sort(keep.begin(), keep.end());
    keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
    // drop disjuncts included in another
    std::vector<Zone> out;
    for (std::size_t i = 0; i < keep.size(); ++i) {
        bool sub = false;
        for (std::size_t j = 0; j < keep.size() && !sub; ++j)
            if (i != j && keep[j].includes(keep[i])) sub = true;
        if (!sub) out.push_back(keep[i]);
    }
    disjuncts = std::move(out);
    return *this;
}

bool ZoneDNF::is_empty() const {
    for (auto z : disjuncts)
        if (z.canonicalize()) return false;
    return true;
}

bool ZoneDNF::contains(const Point& p) const {
    for (auto& z : disjuncts)
        if (z.contains(p)) return true;
    return false;
}

std::optional<Point> ZoneDNF::witness() const {
    for (auto& z : disjuncts)
        if (auto w = z.witness()) return w;
    return std::nullopt;
}

Int ZoneDNF::max_constant() const {
    Int m = 0;
    for (auto& z : disjuncts)
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j < dim; ++j)
                if (i != j && z.at(i, j) != kInf) m = std::max(m, std::abs(bound_value(z.at(i, j))));
    return m;
}

std::string ZoneDNF::str(const std::vector<std::string>& names) const {
    if (disjuncts.empty()) return "false";
    std::string out;
    for (std::size_t k = 0; k < disjuncts.size(); ++k) {
        std::string s = disjuncts[k].str(names);
        if (disjuncts.size() > 1) s = "(" + s + ")";
        out += (k ? " | " : "") + s;
    }
    return out;
}

ZoneDNF dnf_and(const ZoneDNF& a, const ZoneDNF& b) {
    ZoneDNF r = ZoneDNF::bottom(a.dim);
    for (auto& x : a.disjuncts)
        for (auto& y : b.disjuncts) {
            Zone z = x;
            for (std::size_t i = 0; i < a.dim; ++i)
                for (std::size_t j = 0; j < a.dim; ++j)
                    if (i != j) z.add(i, j, y.at(i, j));
            if (z.canonicalize()) r.disjuncts.push_back(std::move(z));
        }
    return r;
}

ZoneDNF dnf_or(const ZoneDNF& a, const ZoneDNF& b) {
    ZoneDNF r = a;
    r.disjuncts.insert(r.disjuncts.end(), b.disjuncts.begin(), b.disjuncts.end());
    return r;
}

ZoneDNF dnf_embed(const ZoneDNF& a, std::size_t new_dim, const std::vector<std::size_t>& map) {
    ZoneDNF r = ZoneDNF::bottom(new_dim);
    for (auto& z : a.disjuncts) r.disjuncts.push_back(z.embed(new_dim, map));
    return r;
}

ZoneDNF dnf_project(const ZoneDNF& a, const std::vector<std::size_t>& keep) {
    ZoneDNF r = ZoneDNF::bottom(keep.size());
    for (auto z : a.disjuncts)
        if (z.canonicalize()) r.disjuncts.push_back(z.restrict_to(keep));
    return r.canonicalize();
}

bool zone_subset(const Zone& z0, const ZoneDNF& d) {
    Zone z = z0;
    if (!z.canonicalize()) return true;
    std::vector<Zone> ds;
    for (auto c : d.disjuncts) {
        if (!c.canonicalize()) continue;
        if (c.includes(z)) return true;
        Zone meet = z;
        for (std::size_t i = 0; i < z.dim(); ++i)
            for (std::size_t j = 0; j < z.dim(); ++j)
                if (i != j) meet.add(i, j, c.at(i, j));
        if (meet.canonicalize()) ds.push_back(c);
    }
    if (ds.empty()) return false;
    // split z along one bound of an overlapping disjunct that z does not imply
    const Zone& c = ds.front();
    for (std::size_t i = 0; i < z.dim(); ++i)
        for (std::size_t j = 0; j < z.dim(); ++j) {
            if (i == j || c.at(i, j) >= z.at(i, j)) continue;
            Zone in = z, out = z;
            in.add(i, j, c.at(i, j));
            out.add(j, i, bound_negate(c.at(i, j)));
            return zone_subset(in, d) && zone_subset(out, d);
        }
    return false;  // unreachable: c includes z
}

std::optional<Int> span_bound(const ZoneDNF& a) {
    if (a.dim <= 1) return Int{0};
    Int best = 0;
    for (auto z : a.disjuncts) {
        if (!z.canonicalize()) continue;
        for (std::size_t i = 0; i < a.dim; ++i)
            for (std::size_t j = 0; j < a.dim; ++j) {
                if (i == j) continue;
                if (z.at(i, j) == kInf) return std::nullopt;
                best = std::max(best, bound_value(z.at(i, j)));
            }
    }
    return best;
}

Int common_denominator(const Point& p) {
    Int l = 1;
    for (auto& q : p) {
        mpz_class den = q.get_den();
        if (!den.fits_slong_p()) throw std::overflow_error("denominator too large");
        l = std::lcm(l, static_cast<Int>(den.get_si()));
    }
    return l;
}

std::string rational_str(const Rational& q) { return q.get_str(); }

Rational parse_rational(const std::string& s) {
    std::string t = s;
    auto dot = t.find('.');
    Rational q;
    if (dot != std::string::npos) {
        // decimal literal
        std::string ip = t.substr(0, dot), fp = t.substr(dot + 1);
        bool neg = !ip.empty() && ip[0] == '-';
        if (neg) ip = ip.substr(1);
        mpz_class num(ip.empty() ? "0" : ip + fp, 10);
        mpz_class den = 1;
        for (std::size_t k = 0; k < fp.size(); ++k) den *= 10;
        q = Rational(num, den);
        if (neg) q = -q;
    } else {
        if (q.set_str(t, 10) != 0) throw std::invalid_argument("bad rational: " + s);
    }
    q.canonicalize();
    return q;
}

} // namespace tpda
