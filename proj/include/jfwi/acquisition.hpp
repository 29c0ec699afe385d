#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "jfwi/core.hpp"
#include "jfwi/helmholtz.hpp"

namespace jfwi {

/// Source and receiver positions as linear grid indices.
///
/// Q (sources) and P (receivers) are never formed: Q*W scatters weighted,
/// 1/h^2-scaled deltas onto the grid and P*U gathers receiver rows.
struct Survey {
    std::vector<Index> src_idx;
    std::vector<Index> rcv_idx;
    bool colocated = false;

    Index num_sources() const { return Index(src_idx.size()); }
    Index num_receivers() const { return Index(rcv_idx.size()); }
};

void validate_survey(const Survey& s, const ModelGrid& g);

/// Evenly spaced sources along grid row `depth_row` and receivers along
/// `receiver_row` (negative: same row), spanning columns 1..nx-2. Colocated
/// when both rows and counts agree.
Survey line_survey(const ModelGrid& g, Index ns, Index nr, Index depth_row = 1,
                   Index receiver_row = -1);

/// n x K grid sources: column j = sum_i amp * W(i, j) * delta_{src_i} / h^2.
CMatrix scatter_sources(const Survey& s, const ModelGrid& g, const RMatrix& weights, double amp);
/// Rows rcv_idx of a field block.
CMatrix gather_receivers(const Survey& s, const CMatrix& fields);
/// Transpose of gather_receivers: spreads Nr x K residuals onto an n x K block.
CMatrix spread_receivers(const Survey& s, Index n, const CMatrix& residual);

struct RickerSource {
    double f_peak = 15.0;
};

/// Amplitude spectrum of r(t) = (1 - 2 pi^2 f_p^2 t^2) exp(-pi^2 f_p^2 t^2):
/// (2/sqrt(pi)) * f^2/f_p^3 * exp(-f^2/f_p^2).
double ricker_amplitude(const RickerSource& w, double f_hz);

/// Nr x Ns source-receiver slice: column i = P * H^-1 (amp * q_i).
FrequencySlice forward_data(const ModelGrid& g, const Survey& s, double omega, double amp,
                            Boundary bc = Boundary::Absorbing);

enum class MaskPattern {
    /// Uniformly random individual entries.
    Entries,
    /// Whole source gathers (columns) removed.
    Columns,
};

/// Exactly round(keep_ratio * rows * cols) ones for Entries (round(keep * cols)
/// whole columns for Columns), deterministic for a given seed.
MaskMatrix make_mask(Index rows, Index cols, double keep_ratio, std::uint64_t seed,
                     MaskPattern pattern = MaskPattern::Entries);

AcquisitionMask apply_mask(const MaskMatrix& mask, const FrequencySlice& slice);

/// Survey index lists as CSV: kind,position,grid_index,iz,ix.
void write_survey_csv(const std::filesystem::path& path, const Survey& s, const ModelGrid& g);

}  // namespace jfwi
