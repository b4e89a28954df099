#include "triad/cvm.hpp"

namespace triad::cvm {

Verdict vote(const ModelOpinion& zero, const ModelOpinion& one) {
    if (zero.decision == one.decision) return {zero.decision, Rationale::consensus};
    // exactly one opinion is "normal" when they disagree
    const ModelOpinion& m = zero.decision == Decision::normal ? zero : one;
    if (m.normal_score_query >= m.normal_score_reference)
        return {Decision::normal, Rationale::trusted_query};
    return {Decision::defect, Rationale::adopted_opposite};
}

}  // namespace triad::cvm
