#pragma once

#include <map>
#include <vector>

#include <Eigen/Core>

#include "traceopt/basis.hpp"

namespace traceopt {

/// Entry-to-trace-class labeling of the tracial Hankel matrix over a basis of
/// tracial words: entry (u,v) is labeled by the class of the reduced trace
/// form of u* v. Equal labels force equal matrix entries (the tracial Hankel
/// condition). Class ids are dense from 0 in first-encounter order scanning
/// the upper triangle row-major, so the constant class (entry (1,1)) is id 0.
struct HankelStructure {
    MomentBasis basis;
    Eigen::MatrixXi class_ids;              // symmetric, size x size
    std::vector<TraceMonomial> class_reps;  // id -> pure monomial
    std::map<TraceMonomial, int> class_index;
    int constant_class = 0;

    int size() const { return basis.size(); }
    /// Number of distinct entry labels, including the constant class.
    int total_class_count() const { return int(class_reps.size()); }
    /// Labels that remain free unknowns once the constant class is pinned by
    /// the normalization L(1) = 1.
    int free_class_count() const { return total_class_count() - 1; }
    /// Linear relations among the size^2 entries under the convention that
    /// counts the normalization together with the entry identifications:
    /// size^2 - free_class_count.
    long long relation_count() const {
        long long s = size();
        return s * s - free_class_count();
    }
};

/// Computes the labeling for a basis (rules taken from the basis).
HankelStructure hankel_classes(const MomentBasis& basis);

/// The pure monomial labeling entry (u,v): reduced trace form of u* v.
TraceMonomial hankel_entry_label(const TraceMonomial& u, const TraceMonomial& v, const RuleSet& rules);

} // namespace traceopt
