#include "critflow/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace critflow {

namespace {

constexpr char kMagic[5] = {'V', 'F', 'L', 'D', '1'};

template <typename U>
void put(std::vector<std::uint8_t>& out, U v) {
    for (std::size_t b = 0; b < sizeof(U); ++b) out.push_back(static_cast<std::uint8_t>((v >> (8 * b)) & 0xff));
}

template <typename U>
U get(const std::vector<std::uint8_t>& in, std::size_t at) {
    U v = 0;
    for (std::size_t b = 0; b < sizeof(U); ++b) v |= static_cast<U>(in[at + b]) << (8 * b);
    return v;
}

[[noreturn]] void bad(std::size_t offset, const std::string& what) {
    fail(ErrorKind::FormatError, what + " at byte offset " + std::to_string(offset));
}

}  // namespace

std::vector<std::uint8_t> encode_field(const RealField& f) {
    const Grid& g = f.grid();
    std::vector<std::uint8_t> out;
    out.reserve(vfld_header_size + 8 * f.data().size());
    out.insert(out.end(), kMagic, kMagic + 5);
    put<std::uint32_t>(out, 3);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(g.n()));
    put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(g.length()));
    out.push_back(static_cast<std::uint8_t>(f.rank()));
    for (double v : f.data()) put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    return out;
}

RealField decode_field(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 5 || std::memcmp(bytes.data(), kMagic, 5) != 0) {
        std::size_t at = 0;
        while (at < 5 && at < bytes.size() && bytes[at] == static_cast<std::uint8_t>(kMagic[at])) ++at;
        bad(at, "bad VFLD1 magic");
    }
    if (bytes.size() < vfld_header_size) bad(bytes.size(), "VFLD1 header truncated");
    std::uint32_t dim = get<std::uint32_t>(bytes, 5);
    if (dim != 3) bad(5, "unsupported dimension " + std::to_string(dim) + " (byte order?)");
    std::uint32_t n = get<std::uint32_t>(bytes, 9);
    if (n < 2 || n > 4096) bad(9, "implausible resolution " + std::to_string(n));
    double L = std::bit_cast<double>(get<std::uint64_t>(bytes, 13));
    if (!(std::isfinite(L) && L > 0.0)) bad(13, "box length is not a positive number");
    std::uint8_t rank = bytes[21];
    if (rank > 2) bad(21, "unknown rank code " + std::to_string(rank));

    RealField f(Grid(static_cast<int>(n), L), static_cast<Rank>(rank));
    const std::size_t need = vfld_header_size + 8 * f.data().size();
    if (bytes.size() != need)
        bad(std::min(bytes.size(), need), "payload holds " + std::to_string(bytes.size() - vfld_header_size) +
                                              " bytes, expected " + std::to_string(need - vfld_header_size));
    std::size_t at = vfld_header_size;
    for (double& v : f.data()) {
        v = std::bit_cast<double>(get<std::uint64_t>(bytes, at));
        at += 8;
    }
    return f;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    require(static_cast<bool>(is), ErrorKind::IoError, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(os), ErrorKind::IoError, "cannot open " + path.string() + " for writing");
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    require(static_cast<bool>(os), ErrorKind::IoError, "write failed: " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    write_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

void save_field(const std::filesystem::path& path, const RealField& f) { write_bytes(path, encode_field(f)); }

RealField load_field(const std::filesystem::path& path) { return decode_field(read_bytes(path)); }

}  // namespace critflow
