#ifndef MKG4D_IO_HPP
#define MKG4D_IO_HPP

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mkg4d/diagnostics.hpp"

namespace mkg4d {

// ---------------------------------------------------------------------------
// Snapshot format, endian-pinned:
//   magic "MKG4" | version u32 LE | n u32 LE | L f64 | t f64 | mass f64
//   then 12 blocks of n^4 f64 LE, row-major over (x1,x2,x3,x4):
//   A1..A4, At1..At4, Re phi, Im phi, Re phit, Im phit.
// ---------------------------------------------------------------------------

constexpr std::uint32_t kSnapshotVersion = 1;

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double d) {
    std::uint64_t v;
    std::memcpy(&v, &d, 8);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct Reader {
    const unsigned char* p;
    const unsigned char* end;

    void need(std::size_t n, const char* what) const {
        if (static_cast<std::size_t>(end - p) < n)
            throw ContractViolation(std::string("snapshot truncated while reading ") + what);
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
        p += 4;
        return v;
    }
    double f64(const char* what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        p += 8;
        double d;
        std::memcpy(&d, &v, 8);
        return d;
    }
};

inline void append_real_block(std::string& out, const ScalarField& f) {
    ScalarField p = to_position(f);
    for (const cplx& v : p.values) put_f64(out, v.real());
}

}  // namespace detail

inline std::string encode_state(const State& s, double mass) {
    std::string out;
    out.reserve(36 + 12 * 8 * s.grid().total());
    out += "MKG4";
    detail::put_u32(out, kSnapshotVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(s.grid().n_per_axis));
    detail::put_f64(out, s.grid().box_length);
    detail::put_f64(out, s.t);
    detail::put_f64(out, mass);
    for (int j = 0; j < 4; ++j) detail::append_real_block(out, s.A[j]);
    for (int j = 0; j < 4; ++j) detail::append_real_block(out, s.At[j]);
    ScalarField phi = to_position(s.phi);
    ScalarField phit = to_position(s.phit);
    for (const cplx& v : phi.values) detail::put_f64(out, v.real());
    for (const cplx& v : phi.values) detail::put_f64(out, v.imag());
    for (const cplx& v : phit.values) detail::put_f64(out, v.real());
    for (const cplx& v : phit.values) detail::put_f64(out, v.imag());
    return out;
}

inline void persist(const State& s, double mass, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ContractViolation("persist: cannot open " + path);
    const std::string bytes = encode_state(s, mass);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw ContractViolation("persist: write failed for " + path);
}

struct LoadedState {
    State state;
    double mass = 0.0;
};

inline LoadedState decode_state(const std::string& bytes) {
    if (bytes.size() < 4 || bytes.compare(0, 4, "MKG4") != 0)
        throw ContractViolation("snapshot: bad magic");
    detail::Reader r{reinterpret_cast<const unsigned char*>(bytes.data()) + 4,
                     reinterpret_cast<const unsigned char*>(bytes.data()) + bytes.size()};
    const std::uint32_t version = r.u32("version");
    if (version != kSnapshotVersion)
        throw ContractViolation("snapshot: unsupported format version " +
                                std::to_string(version));
    const std::uint32_t n = r.u32("n");
    const double L = r.f64("L");
    const GridSpec g(static_cast<int>(n), L);
    LoadedState out;
    out.state.t = r.f64("t");
    out.mass = r.f64("mass");

    const std::size_t total = g.total();
    r.need(12 * 8 * total, "field blocks");
    auto read_real = [&](bool real_flag) {
        ScalarField f(g, Domain::position, real_flag);
        for (std::size_t i = 0; i < total; ++i) f.values[i] = r.f64("sample");
        return f;
    };
    out.state.A = VectorField(g, Domain::position);
    out.state.At = VectorField(g, Domain::position);
    for (int j = 0; j < 4; ++j) out.state.A[j] = read_real(true);
    for (int j = 0; j < 4; ++j) out.state.At[j] = read_real(true);
    ScalarField re = read_real(false), im = read_real(false);
    out.state.phi = ScalarField(g, Domain::position, false);
    for (std::size_t i = 0; i < total; ++i)
        out.state.phi.values[i] = cplx(re.values[i].real(), im.values[i].real());
    re = read_real(false);
    im = read_real(false);
    out.state.phit = ScalarField(g, Domain::position, false);
    for (std::size_t i = 0; i < total; ++i)
        out.state.phit.values[i] = cplx(re.values[i].real(), im.values[i].real());
    if (r.p != r.end) throw ContractViolation("snapshot: trailing bytes");
    return out;
}

inline LoadedState load_state(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ContractViolation("load: cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode_state(bytes);
}

inline void persist(const Trajectory& traj, double mass, const std::string& dir) {
    std::filesystem::create_directories(dir);
    char name[32];
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        std::snprintf(name, sizeof(name), "snap_%06zu.mkg4", i);
        persist(traj.states[i], mass, dir + "/" + name);
    }
}

// ---------------------------------------------------------------------------
// Diagnostics CSV: header time,name,value, floats with 17 significant digits.
// ---------------------------------------------------------------------------

inline void write_diagnostics_csv(const std::vector<DiagnosticSeries>& series,
                                  const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ContractViolation("write_diagnostics_csv: cannot open " + path);
    f << "time,name,value\n";
    char buf[64];
    for (const DiagnosticSeries& s : series) {
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", s.times[i]);
            f << buf << ',' << s.name << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", s.values[i]);
            f << buf << '\n';
        }
    }
}

}  // namespace mkg4d

#endif
