#include "jfwi/acquisition.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "jfwi/random.hpp"

namespace jfwi {

void validate_survey(const Survey& s, const ModelGrid& g)
{
    auto in_range = [&](Index i) { return i >= 0 && i < g.size(); };
    for (Index i : s.src_idx)
        if (!in_range(i))
            throw Error(ErrorKind::BadShape, "source index out of range");
    std::set<Index> seen;
    for (Index i : s.rcv_idx) {
        if (!in_range(i))
            throw Error(ErrorKind::BadShape, "receiver index out of range");
        if (!seen.insert(i).second)
            throw Error(ErrorKind::BadShape, "duplicate receiver index");
    }
    if (s.colocated && s.src_idx != s.rcv_idx)
        throw Error(ErrorKind::BadShape, "colocated survey needs identical source/receiver lists");
}

namespace {

std::vector<Index> spread_columns(const ModelGrid& g, Index count, Index row)
{
    std::vector<Index> idx;
    if (count <= 0)
        return idx;
    const Index first = 1, last = g.nx - 2;
    if (count > last - first + 1)
        throw Error(ErrorKind::BadShape, "more positions than interior grid columns");
    for (Index i = 0; i < count; ++i) {
        const double t = count == 1 ? 0.5 : double(i) / double(count - 1);
        const Index ix = first + Index(std::lround(t * double(last - first)));
        idx.push_back(g.index(row, ix));
    }
    return idx;
}

}  // namespace

Survey line_survey(const ModelGrid& g, Index ns, Index nr, Index depth_row, Index receiver_row)
{
    if (receiver_row < 0)
        receiver_row = depth_row;
    for (Index row : {depth_row, receiver_row})
        if (row <= 0 || row >= g.nz - 1)
            throw Error(ErrorKind::BadShape, "survey row must be an interior grid row");
    Survey s;
    s.src_idx = spread_columns(g, ns, depth_row);
    s.rcv_idx = spread_columns(g, nr, receiver_row);
    s.colocated = s.src_idx == s.rcv_idx;
    validate_survey(s, g);
    return s;
}

CMatrix scatter_sources(const Survey& s, const ModelGrid& g, const RMatrix& weights, double amp)
{
    if (weights.rows() != s.num_sources())
        throw Error(ErrorKind::ShapeMismatch, "weight rows must equal the number of sources");
    const double scale = amp / (g.h * g.h);
    CMatrix q = CMatrix::Zero(g.size(), weights.cols());
    for (Index i = 0; i < s.num_sources(); ++i)
        for (Index j = 0; j < weights.cols(); ++j)
            q(s.src_idx[std::size_t(i)], j) += scale * weights(i, j);
    return q;
}

CMatrix gather_receivers(const Survey& s, const CMatrix& fields)
{
    CMatrix d(s.num_receivers(), fields.cols());
    for (Index r = 0; r < s.num_receivers(); ++r)
        d.row(r) = fields.row(s.rcv_idx[std::size_t(r)]);
    return d;
}

CMatrix spread_receivers(const Survey& s, Index n, const CMatrix& residual)
{
    if (residual.rows() != s.num_receivers())
        throw Error(ErrorKind::ShapeMismatch, "residual rows must equal the number of receivers");
    CMatrix out = CMatrix::Zero(n, residual.cols());
    for (Index r = 0; r < s.num_receivers(); ++r)
        out.row(s.rcv_idx[std::size_t(r)]) += residual.row(r);
    return out;
}

double ricker_amplitude(const RickerSource& w, double f_hz)
{
    if (!(w.f_peak > 0.0))
        throw Error(ErrorKind::BadSpec, "Ricker peak frequency must be positive");
    const double fp = w.f_peak;
    return 2.0 / std::sqrt(M_PI) * (f_hz * f_hz) / (fp * fp * fp) *
           std::exp(-(f_hz * f_hz) / (fp * fp));
}

FrequencySlice forward_data(const ModelGrid& g, const Survey& s, double omega, double amp,
                            Boundary bc)
{
    validate_survey(s, g);
    const auto H = assemble(g, omega, bc);
    const RMatrix eye = RMatrix::Identity(s.num_sources(), s.num_sources());
    FrequencySlice out;
    out.omega = omega;
    out.domain = Domain::SourceReceiver;
    if (amp == 0.0) {
        out.data = CMatrix::Zero(s.num_receivers(), s.num_sources());
        return out;
    }
    out.data = gather_receivers(s, H.solve(scatter_sources(s, g, eye, amp)));
    return out;
}

MaskMatrix make_mask(Index rows, Index cols, double keep_ratio, std::uint64_t seed,
                     MaskPattern pattern)
{
    if (!(keep_ratio > 0.0 && keep_ratio <= 1.0))
        throw Error(ErrorKind::BadRatio, "keep ratio must lie in (0, 1]");
    if (rows <= 0 || cols <= 0)
        throw Error(ErrorKind::BadShape, "mask dimensions must be positive");

    const Index units = pattern == MaskPattern::Entries ? rows * cols : cols;
    const Index keep = Index(std::llround(keep_ratio * double(units)));

    // partial Fisher-Yates: the first `keep` slots of the permutation are kept
    std::vector<Index> order(static_cast<std::size_t>(units));
    std::iota(order.begin(), order.end(), Index(0));
    Rng rng(seed);
    for (Index i = 0; i < keep; ++i) {
        const Index j = i + Index(rng.below(std::uint64_t(units - i)));
        std::swap(order[std::size_t(i)], order[std::size_t(j)]);
    }

    MaskMatrix mask = MaskMatrix::Constant(rows, cols, false);
    for (Index i = 0; i < keep; ++i) {
        const Index u = order[std::size_t(i)];
        if (pattern == MaskPattern::Entries)
            mask(u % rows, u / rows) = true;
        else
            mask.col(u).setConstant(true);
    }
    return mask;
}

AcquisitionMask apply_mask(const MaskMatrix& mask, const FrequencySlice& slice)
{
    if (slice.domain != Domain::SourceReceiver)
        throw Error(ErrorKind::WrongDomain, "masks act on source-receiver slices");
    AcquisitionMask out;
    out.mask = mask;
    out.observed.omega = slice.omega;
    out.observed.domain = Domain::SourceReceiver;
    out.observed.data = apply_mask_to(mask, slice.data);
    return out;
}

void write_survey_csv(const std::filesystem::path& path, const Survey& s, const ModelGrid& g)
{
    std::ofstream os(path);
    if (!os)
        throw Error(ErrorKind::Io, "cannot open " + path.string());
    os << "kind,position,grid_index,iz,ix\n";
    auto emit = [&](const char* kind, const std::vector<Index>& idx) {
        for (std::size_t p = 0; p < idx.size(); ++p)
            os << kind << ',' << p << ',' << idx[p] << ',' << idx[p] % g.nz << ','
               << idx[p] / g.nz << '\n';
    };
    emit("source", s.src_idx);
    emit("receiver", s.rcv_idx);
}

}  // namespace jfwi
