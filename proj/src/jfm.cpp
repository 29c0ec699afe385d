#include "jfwi/jfm.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace jfwi::jfm {
namespace {

constexpr std::array<char, 8> kMagic{'J', 'F', 'I', 'F', 'M', 'A', 'T', '1'};

static_assert(std::endian::native == std::endian::little,
              "JFM1 I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& os, const T& v)
{
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is)
{
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

std::ofstream open_out(const std::filesystem::path& path)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    return os;
}

void header(std::ostream& os, Index rows, Index cols, DType dtype)
{
    os.write(kMagic.data(), kMagic.size());
    put<std::uint64_t>(os, std::uint64_t(rows));
    put<std::uint64_t>(os, std::uint64_t(cols));
    put<std::uint8_t>(os, std::uint8_t(dtype));
}

}  // namespace

void write(const std::filesystem::path& path, const RMatrix& a)
{
    auto os = open_out(path);
    header(os, a.rows(), a.cols(), DType::Real);
    os.write(reinterpret_cast<const char*>(a.data()), std::streamsize(a.size() * sizeof(double)));
    if (!os)
        throw Error(ErrorKind::Io, "write failed: " + path.string());
}

void write(const std::filesystem::path& path, const CMatrix& a)
{
    auto os = open_out(path);
    header(os, a.rows(), a.cols(), DType::Complex);
    // std::complex<double> is layout-compatible with double[2]
    os.write(reinterpret_cast<const char*>(a.data()),
             std::streamsize(a.size() * 2 * sizeof(double)));
    if (!os)
        throw Error(ErrorKind::Io, "write failed: " + path.string());
}

void write(const std::filesystem::path& path, const ModelGrid& g)
{
    write(path, RMatrix(g.as_image()));
}

AnyMatrix read(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::array<char, 8> magic{};
    is.read(magic.data(), magic.size());
    if (!is || magic != kMagic)
        throw Error(ErrorKind::Io, path.string() + " is not a JFM1 file");
    const auto rows = get<std::uint64_t>(is);
    const auto cols = get<std::uint64_t>(is);
    const auto dtype = get<std::uint8_t>(is);
    if (!is)
        throw Error(ErrorKind::Io, "truncated JFM1 header in " + path.string());
    if (rows > (1ull << 31) || cols > (1ull << 31))
        throw Error(ErrorKind::Io, "implausible JFM1 dimensions in " + path.string());

    AnyMatrix out;
    if (dtype == std::uint8_t(DType::Real)) {
        RMatrix a(static_cast<Index>(rows), static_cast<Index>(cols));
        is.read(reinterpret_cast<char*>(a.data()), std::streamsize(a.size() * sizeof(double)));
        out = std::move(a);
    } else if (dtype == std::uint8_t(DType::Complex)) {
        CMatrix a(static_cast<Index>(rows), static_cast<Index>(cols));
        is.read(reinterpret_cast<char*>(a.data()),
                std::streamsize(a.size() * 2 * sizeof(double)));
        out = std::move(a);
    } else {
        throw Error(ErrorKind::Io, "unknown JFM1 dtype " + std::to_string(dtype));
    }
    if (!is)
        throw Error(ErrorKind::Io, "truncated JFM1 payload in " + path.string());
    return out;
}

RMatrix read_real(const std::filesystem::path& path)
{
    auto any = read(path);
    if (auto* r = std::get_if<RMatrix>(&any))
        return std::move(*r);
    throw Error(ErrorKind::Io, path.string() + " holds complex data, expected real");
}

CMatrix read_complex(const std::filesystem::path& path)
{
    auto any = read(path);
    if (auto* c = std::get_if<CMatrix>(&any))
        return std::move(*c);
    return std::get<RMatrix>(any).cast<Complex>();
}

}  // namespace jfwi::jfm
