#include "gasdsr/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gasdsr/errors.hpp"

namespace gasdsr {

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(target.parent_path(), ec);
    }
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ParseError("cannot write '" + tmp.string() + "'");
        out << content;
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw ParseError("short write to '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw ParseError("cannot move temporary onto '" + path + "'");
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string trajectory_to_csv(const Trajectory& traj, const GasNetwork& net, const Grid& grid) {
    std::ostringstream out;
    out << "t,pipe,seg,rho,m\n";
    char buf[64];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.12g", v);
        return std::string(buf);
    };
    for (size_t t = 0; t < traj.states.size(); ++t) {
        const SystemState& st = traj.states[t];
        for (size_t p = 0; p < grid.pipes.size(); ++p) {
            for (int s = 0; s < grid.pipes[p].n_seg; ++s) {
                out << t << "," << net.pipes[p].id << "," << s << ","
                    << fmt(st.rho(grid, static_cast<int>(p), s)) << ","
                    << fmt(st.flow(grid, static_cast<int>(p), s)) << "\n";
            }
        }
    }
    return out.str();
}

std::string linepack_to_csv(const Trajectory& traj) {
    std::ostringstream out;
    out << "t,linepack_kg\n";
    char buf[64];
    for (size_t t = 0; t < traj.linepack.size(); ++t) {
        std::snprintf(buf, sizeof(buf), "%.12g", traj.linepack[t]);
        out << t << "," << buf << "\n";
    }
    return out.str();
}

} // namespace gasdsr
