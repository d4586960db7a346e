#include "afield/trajectory.hpp"

#include "afield/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <string_view>

namespace afield {

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
    text = trim(text);
    if (text.empty()) return false;
    if (text.front() == '+') text.remove_prefix(1);
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc{} && ptr == end;
}

} // namespace

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

ParseResult parse_trajectories(std::istream& in, std::optional<std::size_t> expected_dim) {
    ParseResult result;
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line)) return result;
    ++line_no;
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

    const auto header = split_csv(trim(line));
    if (header.size() < 3 || trim(header[0]) != "traj_id" || trim(header[1]) != "k")
        throw ParseError("header must be traj_id,k,x1,...,xn", line_no);
    const std::size_t dim = header.size() - 2;
    for (std::size_t i = 0; i < dim; ++i) {
        if (trim(header[i + 2]) != "x" + std::to_string(i + 1))
            throw ParseError("unexpected coordinate column '" + std::string(trim(header[i + 2])) + "'", line_no);
    }
    if (expected_dim && *expected_dim != dim)
        throw SchemaError("trajectory file has dimension " + std::to_string(dim) + ", expected " +
                          std::to_string(*expected_dim));

    std::vector<Trajectory> groups;
    std::map<std::string, std::size_t, std::less<>> index_of;

    while (std::getline(in, line)) {
        ++line_no;
        const auto row = trim(line);
        if (row.empty()) continue;
        const auto fields = split_csv(row);
        if (fields.size() != dim + 2)
            throw ParseError("expected " + std::to_string(dim + 2) + " fields, got " + std::to_string(fields.size()),
                             line_no);
        const auto id = trim(fields[0]);
        if (id.empty()) throw ParseError("empty traj_id", line_no);

        Observation obs;
        if (!parse_number(fields[1], obs.k) || obs.k < 0)
            throw ParseError("k must be a non-negative integer", line_no);
        obs.z.resize(static_cast<Eigen::Index>(dim));
        for (std::size_t i = 0; i < dim; ++i) {
            double v = 0.0;
            if (!parse_number(fields[i + 2], v) || !std::isfinite(v))
                throw ParseError("coordinate x" + std::to_string(i + 1) + " is not a finite number", line_no);
            obs.z[static_cast<Eigen::Index>(i)] = v;
        }

        auto it = index_of.find(id);
        if (it == index_of.end()) {
            it = index_of.emplace(std::string(id), groups.size()).first;
            groups.push_back(Trajectory{std::string(id), {}});
        }
        groups[it->second].observations.push_back(std::move(obs));
    }

    // The file shares one sample interval: the most common k step (smallest
    // on ties).
    std::map<std::int64_t, std::size_t> step_count;
    for (auto& t : groups) {
        std::stable_sort(t.observations.begin(), t.observations.end(),
                         [](const Observation& a, const Observation& b) { return a.k < b.k; });
        for (std::size_t i = 1; i < t.size(); ++i) ++step_count[t.observations[i].k - t.observations[i - 1].k];
    }
    std::int64_t dk = 0;
    std::size_t best = 0;
    for (const auto& [step, n] : step_count)
        if (step > 0 && n > best) {
            dk = step;
            best = n;
        }

    for (auto& t : groups) {
        if (t.size() < 2) {
            result.warnings.push_back("trajectory '" + t.id + "' has fewer than 2 points; dropped");
            continue;
        }
        bool uniform = true;
        for (std::size_t i = 1; uniform && i < t.size(); ++i)
            uniform = t.observations[i].k - t.observations[i - 1].k == dk;
        if (!uniform) {
            result.warnings.push_back("trajectory '" + t.id + "' is not uniformly sampled; rejected");
            continue;
        }
        result.trajectories.push_back(std::move(t));
    }
    return result;
}

void write_trajectories(std::ostream& out, std::span<const Trajectory> trajectories) {
    std::size_t dim = 0;
    for (const auto& t : trajectories) {
        if (t.size() == 0) continue;
        if (dim == 0) dim = t.dim();
        if (t.dim() != dim) throw SchemaError("trajectories with mixed dimensions cannot share a file");
    }
    if (dim == 0) dim = 2;

    out << "traj_id,k";
    for (std::size_t i = 1; i <= dim; ++i) out << ",x" << i;
    out << '\n';
    for (const auto& t : trajectories) {
        for (const auto& o : t.observations) {
            out << t.id << ',' << o.k;
            for (Eigen::Index i = 0; i < o.z.size(); ++i) out << ',' << format_double(o.z[i]);
            out << '\n';
        }
    }
}

std::vector<Velocity> finite_difference_velocity(const Trajectory& t) {
    detail::require(t.size() >= 2, "finite_difference_velocity needs at least 2 observations");
    std::vector<Velocity> v;
    v.reserve(t.size() - 1);
    for (std::size_t i = 0; i + 1 < t.size(); ++i)
        v.push_back(t.observations[i + 1].z - t.observations[i].z);
    return v;
}

} // namespace afield
