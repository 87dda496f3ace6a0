#include "tdcg/trj_io.hpp"

#include <bit>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "tdcg/errors.hpp"

namespace tdcg {

namespace {

template <typename T>
T to_little(T v)
{
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    }
    return v;
}

class ByteWriter
{
public:
    template <typename T>
    void put(T v)
    {
        v = to_little(v);
        const auto* p = reinterpret_cast<const char*>(&v);
        buf_.insert(buf_.end(), p, p + sizeof(T));
    }
    void put_reals(std::span<const double> xs)
    {
        for (double x : xs)
            put(x);
    }
    void put_bytes(const char* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }
    const std::vector<char>& bytes() const { return buf_; }

private:
    std::vector<char> buf_;
};

class ByteReader
{
public:
    explicit ByteReader(std::vector<char> buf) : buf_(std::move(buf)) {}

    template <typename T>
    T get()
    {
        if (pos_ + sizeof(T) > buf_.size())
            throw TruncationError(buf_.size());
        T v;
        std::memcpy(&v, buf_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return to_little(v);
    }
    void get_reals(std::vector<double>& out, std::size_t n)
    {
        out.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            out[i] = get<double>();
    }
    std::size_t size() const { return buf_.size(); }
    std::size_t pos() const { return pos_; }
    const char* data() const { return buf_.data(); }
    void skip(std::size_t n)
    {
        if (pos_ + n > buf_.size())
            throw TruncationError(buf_.size());
        pos_ += n;
    }

private:
    std::vector<char> buf_;
    std::size_t pos_ = 0;
};

std::string os_cause() { return std::strerror(errno); }

}  // namespace

void write_trajectory(const Trajectory& traj, const std::filesystem::path& destination)
{
    traj.validate();

    ByteWriter w;
    w.put_bytes("TRJ1", 4);
    w.put<std::uint32_t>(kTrj1Version);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(traj.dim()));
    w.put<std::uint64_t>(traj.particles());
    w.put<std::uint64_t>(traj.size());
    w.put<double>(traj.dt_nominal());
    w.put<std::uint8_t>(traj.has_forces() ? 1 : 0);
    const char pad[7] = {};
    w.put_bytes(pad, sizeof pad);
    w.put_reals(traj.masses());
    for (std::size_t i = 0; i < traj.size(); ++i) {
        w.put<double>(traj.times()[i]);
        w.put_reals(traj.positions(i));
        w.put_reals(traj.momenta(i));
        if (traj.has_forces())
            w.put_reals(traj.forces(i));
    }

    std::ofstream out(destination, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open " + destination.string() + " for writing: " + os_cause());
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    out.close();
    if (!out)
        throw IoError("write to " + destination.string() + " failed: " + os_cause());
}

Trajectory read_trajectory(const std::filesystem::path& source)
{
    std::ifstream in(source, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + source.string() + ": " + os_cause());
    std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    ByteReader r(std::move(buf));
    if (r.size() < 4 || std::memcmp(r.data(), "TRJ1", 4) != 0)
        throw FormatError(source.string() + ": bad magic (expected \"TRJ1\")");
    r.skip(4);
    const auto version = r.get<std::uint32_t>();
    if (version != kTrj1Version)
        throw VersionError(version, kTrj1Version);
    const auto dim = r.get<std::uint32_t>();
    const auto particles = r.get<std::uint64_t>();
    const auto n_frames = r.get<std::uint64_t>();
    const auto dt = r.get<double>();
    const bool has_forces = r.get<std::uint8_t>() != 0;
    r.skip(7);
    if (dim == 0 || particles == 0)
        throw FormatError(source.string() + ": header declares an empty frame layout");

    std::vector<double> masses;
    r.get_reals(masses, particles);

    Trajectory traj(static_cast<int>(dim), particles, dt, std::move(masses), has_forces);
    const std::size_t w = traj.width();
    const std::size_t frame_bytes = sizeof(double) * (1 + w * (has_forces ? 3 : 2));
    if ((r.size() - r.pos()) / frame_bytes < n_frames)
        // report the offset where the first incomplete frame starts
        throw TruncationError(r.pos() + ((r.size() - r.pos()) / frame_bytes) * frame_bytes);
    traj.reserve(n_frames);
    std::vector<double> q, p, f;
    for (std::uint64_t i = 0; i < n_frames; ++i) {
        const double t = r.get<double>();
        r.get_reals(q, w);
        r.get_reals(p, w);
        if (has_forces)
            r.get_reals(f, w);
        traj.append(t, q, p, has_forces ? std::span<const double>(f) : std::span<const double>());
    }
    traj.validate();
    return traj;
}

void write_ensemble(const Ensemble& ens, const std::filesystem::path& directory)
{
    ens.validate();
    std::filesystem::create_directories(directory);
    std::ofstream index(directory / "ensemble.txt");
    if (!index)
        throw IoError("cannot write ensemble index in " + directory.string() + ": " + os_cause());
    index << std::setprecision(17) << "beta " << ens.beta << "\npaths " << ens.paths.size() << "\n";
    for (std::size_t k = 0; k < ens.paths.size(); ++k) {
        std::ostringstream name;
        name << "path_" << std::setw(5) << std::setfill('0') << k << ".trj";
        write_trajectory(ens.paths[k], directory / name.str());
        index << name.str() << "\n";
    }
    if (!index)
        throw IoError("write to ensemble index failed: " + os_cause());
}

Ensemble read_ensemble(const std::filesystem::path& directory)
{
    std::ifstream index(directory / "ensemble.txt");
    if (!index)
        throw IoError("cannot open " + (directory / "ensemble.txt").string() + ": " + os_cause());
    std::string key;
    Ensemble ens;
    std::size_t n = 0;
    if (!(index >> key >> ens.beta) || key != "beta" || !(index >> key >> n) || key != "paths")
        throw FormatError("malformed ensemble index in " + directory.string());
    ens.paths.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::string name;
        if (!(index >> name))
            throw FormatError("ensemble index lists fewer than " + std::to_string(n) + " paths");
        ens.paths.push_back(read_trajectory(directory / name));
    }
    ens.validate();
    return ens;
}

void export_trajectory_csv(const Trajectory& traj, const std::filesystem::path& destination)
{
    std::ofstream out(destination);
    if (!out)
        throw IoError("cannot open " + destination.string() + ": " + os_cause());
    out << std::setprecision(17) << "time,particle,axis,q,p,f\n";
    const auto d = static_cast<std::size_t>(traj.dim());
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto q = traj.positions(i), p = traj.momenta(i), f = traj.forces(i);
        for (std::size_t m = 0; m < traj.particles(); ++m)
            for (std::size_t a = 0; a < d; ++a) {
                const std::size_t k = m * d + a;
                out << traj.times()[i] << ',' << m << ',' << a << ',' << q[k] << ',' << p[k] << ',';
                if (!f.empty())
                    out << f[k];
                out << '\n';
            }
    }
}

}  // namespace tdcg
