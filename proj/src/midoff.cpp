#include "jfwi/midoff.hpp"

namespace jfwi {

MaskMatrix midoff_support(Index rows, Index cols)
{
    const MidOffMap map(rows, cols);
    MaskMatrix s = MaskMatrix::Constant(map.order(), map.order(), false);
    for (Index c = 0; c < cols; ++c)
        for (Index r = 0; r < rows; ++r)
            s(map.mid(r, c), map.off(r, c)) = true;
    return s;
}

FrequencySlice to_midoff(const FrequencySlice& d)
{
    if (d.domain != Domain::SourceReceiver)
        throw Error(ErrorKind::WrongDomain, "to_midoff expects a source-receiver slice");
    return {d.omega, Domain::MidpointOffset, to_midoff(d.data)};
}

FrequencySlice from_midoff(const FrequencySlice& y, Index rows, Index cols)
{
    if (y.domain != Domain::MidpointOffset)
        throw Error(ErrorKind::WrongDomain, "from_midoff expects a midpoint-offset slice");
    return {y.omega, Domain::SourceReceiver, from_midoff(y.data, rows, cols)};
}

}  // namespace jfwi
