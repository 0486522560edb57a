#pragma once

// Symbolic encodings of trajectories: the signed spike-count sequence (SSCS)
// event encoder, the six-letter burst itinerary alphabet, exact dyadic
// itinerary addresses under the signed lexicographical ordering, and LZ76
// complexity.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "equilibria.hpp"
#include "integrate.hpp"

namespace sinchaos {

using BigInt = boost::multiprecision::cpp_int;

enum class SscsEvent { I, VPlus, VMinus, Done };

using Sscs = std::vector<int>;

struct GrammarViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MissingSaddleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Streaming form of the spike-count encoder: a counter increments on V+; a
// V- event commits the count, negated when the event two positions earlier
// was a V+ (the burst reinserted on the orientation-reversing side).
class SscsEncoder {
public:
    void push(SscsEvent e)
    {
        if (e == SscsEvent::VMinus) {
            if (prev_prev_ == SscsEvent::VPlus)
                out_.push_back(-spikes_);
            else
                out_.push_back(spikes_);
            spikes_ = 0;
        } else if (e == SscsEvent::VPlus) {
            ++spikes_;
        }
        prev_prev_ = prev_;
        prev_ = e;
    }

    const Sscs& sequence() const { return out_; }

private:
    // prev_/prev_prev_ start as Done, which never equals VPlus, matching the
    // NULL initialization of the streaming algorithm.
    int spikes_ = 0;
    SscsEvent prev_ = SscsEvent::Done;
    SscsEvent prev_prev_ = SscsEvent::Done;
    Sscs out_;
};

inline Sscs encode_sscs(const std::vector<SscsEvent>& events)
{
    if (events.empty())
        return {};
    if (events.back() != SscsEvent::Done)
        throw std::invalid_argument("encode_sscs: event list must end with Done");
    SscsEncoder enc;
    for (SscsEvent e : events)
        enc.push(e);
    return enc.sequence();
}

// Maps integrator events onto the encoder alphabet; V maxima are classified
// as spikes against the upper-saddle voltage V_SD. Section and custom events
// are not part of the encoding and are skipped.
inline std::vector<SscsEvent> classify_voltage_events(const std::vector<Event>& events, double V_SD)
{
    std::vector<SscsEvent> out;
    out.reserve(events.size());
    for (const Event& e : events) {
        switch (e.kind) {
            case EventKind::DVMax:
                out.push_back(SscsEvent::I);
                break;
            case EventKind::VMaxAbove:
            case EventKind::VMaxBelow:
                out.push_back(e.state.V > V_SD ? SscsEvent::VPlus : SscsEvent::VMinus);
                break;
            default:
                break;
        }
    }
    return out;
}

inline double upper_saddle_voltage(const ModelParams& p)
{
    const auto eqs = find_equilibria(p);
    const Equilibrium* sd = upper_saddle(eqs);
    if (!sd)
        throw MissingSaddleError("no Saddle41 equilibrium at these parameters");
    return sd->state.V;
}

inline std::vector<SscsEvent> classify_voltage_events(const std::vector<Event>& events,
                                                      const ModelParams& p)
{
    return classify_voltage_events(events, upper_saddle_voltage(p));
}

inline Sscs encode_trajectory(const std::vector<Event>& events, double V_SD)
{
    std::vector<SscsEvent> sev = classify_voltage_events(events, V_SD);
    sev.push_back(SscsEvent::Done);
    return encode_sscs(sev);
}

// ---- itineraries ----

enum class Symbol : std::uint8_t { A, B, C, D, E, F };

using Itinerary = std::vector<Symbol>;

inline char to_char(Symbol s) { return static_cast<char>('A' + static_cast<int>(s)); }

inline Symbol symbol_from_char(char c)
{
    if (c < 'A' || c > 'F')
        throw GrammarViolation(std::string("unknown itinerary symbol '") + c + "'");
    return static_cast<Symbol>(c - 'A');
}

inline std::string to_string(const Itinerary& it)
{
    std::string s;
    s.reserve(it.size());
    for (Symbol sym : it)
        s.push_back(to_char(sym));
    return s;
}

inline Itinerary itinerary_from_string(const std::string& s)
{
    Itinerary it;
    it.reserve(s.size());
    for (char c : s)
        it.push_back(symbol_from_char(c));
    return it;
}

// 0 -> A; +k -> B D^(k-1) C E; -k -> B D^(k-1) C F.
inline Itinerary itinerary_from_sscs(const Sscs& s)
{
    Itinerary it;
    for (int v : s) {
        if (v == 0) {
            it.push_back(Symbol::A);
            continue;
        }
        const int k = v > 0 ? v : -v;
        it.push_back(Symbol::B);
        for (int i = 0; i < k - 1; ++i)
            it.push_back(Symbol::D);
        it.push_back(Symbol::C);
        it.push_back(v > 0 ? Symbol::E : Symbol::F);
    }
    return it;
}

// Inverse of itinerary_from_sscs; a trailing incomplete burst is ignored.
inline Sscs sscs_from_itinerary(const Itinerary& it)
{
    Sscs out;
    std::size_t i = 0;
    while (i < it.size()) {
        if (it[i] == Symbol::A) {
            out.push_back(0);
            ++i;
            continue;
        }
        if (it[i] != Symbol::B)
            throw GrammarViolation("burst must start with A or B");
        ++i;
        int spikes = 1;
        while (i < it.size() && it[i] == Symbol::D) {
            ++spikes;
            ++i;
        }
        if (i >= it.size())
            break;  // incomplete burst at the end
        if (it[i] != Symbol::C)
            throw GrammarViolation("expected C after spike run");
        ++i;
        if (i >= it.size())
            break;
        if (it[i] == Symbol::E)
            out.push_back(spikes);
        else if (it[i] == Symbol::F)
            out.push_back(-spikes);
        else
            throw GrammarViolation("expected E or F after C");
        ++i;
    }
    return out;
}

// Validates that an itinerary is a prefix of the burst grammar
// (A | B D* C (E|F))*; incomplete trailing bursts are allowed.
inline void validate_grammar(const Itinerary& it)
{
    enum class St { Top, Spiking, AfterC };
    St st = St::Top;
    for (Symbol s : it) {
        switch (st) {
            case St::Top:
                if (s == Symbol::A)
                    break;
                if (s == Symbol::B) {
                    st = St::Spiking;
                    break;
                }
                throw GrammarViolation("expected A or B between bursts");
            case St::Spiking:
                if (s == Symbol::D)
                    break;
                if (s == Symbol::C) {
                    st = St::AfterC;
                    break;
                }
                throw GrammarViolation("expected D or C inside a burst");
            case St::AfterC:
                if (s == Symbol::E || s == Symbol::F) {
                    st = St::Top;
                    break;
                }
                throw GrammarViolation("expected E or F after C");
        }
    }
}

// Exact dyadic subinterval (lo, lo + 2^-depth) of [0, 1].
struct ItineraryAddress {
    BigInt lo_num;  // lo = lo_num / 2^depth
    int depth = 0;

    BigInt hi_num() const { return lo_num + 1; }

    double lo_double() const
    {
        if (lo_num == 0)
            return 0.0;
        const int bits = static_cast<int>(boost::multiprecision::msb(lo_num)) + 1;
        const int shift = bits > 53 ? bits - 53 : 0;
        const std::uint64_t top = static_cast<std::uint64_t>(lo_num >> shift);
        return std::ldexp(static_cast<double>(top), shift - depth);
    }
};

inline constexpr int kMaxAddressDepth = 4096;

// Successive bisection of (0, 1) along the binary choices of the itinerary.
// The alphabetically-first branch of each pair takes the left subinterval
// while the number of orientation-reversing symbols (C or E) seen so far is
// even, and the right subinterval when it is odd.
inline ItineraryAddress address(const Itinerary& it)
{
    validate_grammar(it);
    if (it.size() > static_cast<std::size_t>(kMaxAddressDepth))
        throw std::length_error("address: itinerary exceeds the 4096-symbol depth cap");

    ItineraryAddress a;
    a.lo_num = 0;
    a.depth = 0;
    int flips = 0;
    for (Symbol s : it) {
        bool first;  // alphabetically first member of its binary pair
        switch (s) {
            case Symbol::A:
            case Symbol::C:
            case Symbol::E: first = true; break;
            default: first = false; break;
        }
        const bool left = (flips % 2 == 0) ? first : !first;
        a.lo_num <<= 1;
        if (!left)
            a.lo_num += 1;
        ++a.depth;
        if (s == Symbol::C || s == Symbol::E)
            ++flips;
    }
    return a;
}

enum class Ordering { Less, Greater, Equal, LeftContainsRight, RightContainsLeft };

// Ordering of two itineraries through their address intervals. Dyadic
// intervals are either nested or disjoint, so the verdict is one of strict
// order, equality, or containment.
inline Ordering compare(const Itinerary& ia, const Itinerary& ib)
{
    const ItineraryAddress a = address(ia);
    const ItineraryAddress b = address(ib);
    const int d = std::max(a.depth, b.depth);
    const BigInt alo = a.lo_num << (d - a.depth);
    const BigInt ahi = (a.lo_num + 1) << (d - a.depth);
    const BigInt blo = b.lo_num << (d - b.depth);
    const BigInt bhi = (b.lo_num + 1) << (d - b.depth);

    if (alo == blo && ahi == bhi)
        return Ordering::Equal;
    if (ahi <= blo)
        return Ordering::Less;
    if (bhi <= alo)
        return Ordering::Greater;
    if (alo <= blo && bhi <= ahi)
        return Ordering::LeftContainsRight;
    return Ordering::RightContainsLeft;
}

// ---- LZ76 complexity ----

// Number of phrases in the Lempel-Ziv 1976 exhaustive-history parse,
// computed with the streaming scan of Kaspar and Schuster.
template <typename Seq>
int lz76(const Seq& s)
{
    const std::size_t n = s.size();
    if (n == 0)
        return 0;
    int c = 1;
    std::size_t l = 1, i = 0, k = 1, kmax = 1;
    if (l >= n)
        return c;
    for (;;) {
        if (s[i + k - 1] == s[l + k - 1]) {
            ++k;
            if (l + k > n) {
                ++c;
                break;
            }
        } else {
            if (k > kmax)
                kmax = k;
            ++i;
            if (i == l) {
                ++c;
                l += kmax;
                if (l + 1 > n)
                    break;
                i = 0;
                k = 1;
                kmax = 1;
            } else {
                k = 1;
            }
        }
    }
    return c;
}

} // namespace sinchaos
