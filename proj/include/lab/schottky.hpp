#pragma once
#include <cmath>
#include <string>
#include <vector>

#include "lab/geometry.hpp"

namespace lab {

// boundary disk given by the arc it cuts: center angle and angular radius
struct DiskSpec {
    double center_angle = 0.0;
    double angular_radius = 0.0;
    Arc arc() const { return Arc{wrap_angle(center_angle), angular_radius}; }
};

struct GroupModel {
    // letter order: g1, g1^{-1}, g2, g2^{-1}, ...
    std::vector<MoebiusMap> gens;
    std::vector<DiskSpec> disks; // source disks in spec order; gens[2i] pairs 2i -> 2i+1
    int rank = 0;
    bool elementary = false; // rank 1: two-point limit set, no exponential growth
    double alpha_estimate = -1.0;

    int letter_count() const { return static_cast<int>(gens.size()); }
};

// Euclidean center of the geodesic with boundary endpoints at angle +- r of theta
inline cplx geodesic_center(double theta, double r) {
    return std::polar(1.0, theta) / std::cos(r);
}

// composition of the inversions in two disjoint geodesics: maps the exterior of
// the A-halfplane into the B-halfplane
inline MoebiusMap pair_map(cplx cA, cplx cB) {
    cplx P = cB * std::conj(cA) - 1.0;
    cplx Q = cA - cB;
    if (std::norm(P) - std::norm(Q) <= 0.0)
        throw DisksOverlap("pair_map: disks are not disjoint");
    return MoebiusMap::from_ab(P, Q);
}

namespace detail {

inline bool closed_arcs_overlap(const Arc& a, const Arc& b) {
    return std::abs(wrap_signed(a.center - b.center)) <= a.half_width + b.half_width;
}

// ping-pong certificate: g sends the complement of arc A into arc B (and g^{-1}
// the complement of B into A), checked by direct interval-image sampling
inline void check_pingpong(const MoebiusMap& g, const Arc& A, const Arc& B) {
    const int samples = 64;
    double comp_width = kTwoPi - 2.0 * A.half_width;
    for (int i = 0; i <= samples; ++i) {
        double t = A.center + A.half_width + comp_width * i / samples;
        double image = g.act_angle(t);
        if (std::abs(wrap_signed(image - B.center)) > B.half_width + 1e-9)
            throw LabError("build_schottky: ping-pong certificate failed");
    }
}

} // namespace detail

inline GroupModel build_schottky(const std::vector<DiskSpec>& specs) {
    if (specs.size() < 2 || specs.size() % 2 != 0)
        throw LabError("build_schottky: need an even number >= 2 of disks");
    for (const auto& d : specs)
        if (!(d.angular_radius > 0.0) || d.angular_radius >= kPi / 2)
            throw DegenerateDisk("build_schottky: angular radius out of (0, pi/2)");
    for (size_t i = 0; i < specs.size(); ++i)
        for (size_t j = i + 1; j < specs.size(); ++j)
            if (detail::closed_arcs_overlap(specs[i].arc(), specs[j].arc()))
                throw DisksOverlap("build_schottky: boundary disks overlap");

    GroupModel G;
    G.disks = specs;
    G.rank = static_cast<int>(specs.size()) / 2;
    G.elementary = (G.rank == 1);
    for (int i = 0; i < G.rank; ++i) {
        const DiskSpec& A = specs[2 * i];
        const DiskSpec& B = specs[2 * i + 1];
        MoebiusMap g = pair_map(geodesic_center(A.center_angle, A.angular_radius),
                                geodesic_center(B.center_angle, B.angular_radius));
        detail::check_pingpong(g, A.arc(), B.arc());
        detail::check_pingpong(g.inverse(), B.arc(), A.arc());
        G.gens.push_back(g);
        G.gens.push_back(g.inverse());
    }
    return G;
}

// word letters: generator i is 'a'+i, its inverse 'A'+i
inline char letter_char(int letter_index) {
    int i = letter_index / 2;
    return (letter_index % 2 == 0) ? static_cast<char>('a' + i)
                                   : static_cast<char>('A' + i);
}

inline int letter_index(char c) {
    return (c >= 'a') ? 2 * (c - 'a') : 2 * (c - 'A') + 1;
}

inline char invert_letter(char c) {
    return (c >= 'a') ? static_cast<char>(c - 'a' + 'A')
                      : static_cast<char>(c - 'A' + 'a');
}

inline std::string invert_word(const std::string& w) {
    std::string out;
    out.reserve(w.size());
    for (auto it = w.rbegin(); it != w.rend(); ++it) out.push_back(invert_letter(*it));
    return out;
}

// order words by letter index (generator, inverse, next generator, ...), then length
inline bool word_less(const std::string& u, const std::string& v) {
    size_t n = std::min(u.size(), v.size());
    for (size_t i = 0; i < n; ++i) {
        int ru = letter_index(u[i]), rv = letter_index(v[i]);
        if (ru != rv) return ru < rv;
    }
    return u.size() < v.size();
}

} // namespace lab
