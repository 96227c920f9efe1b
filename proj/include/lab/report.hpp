#pragma once
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lab/partition.hpp"

namespace lab {

inline constexpr const char* kGeometryVersion = "1.0.0";
inline constexpr const char* kGroupVersion = "1.0.0";
inline constexpr const char* kMeasureVersion = "1.0.0";
inline constexpr const char* kRepresentationVersion = "1.0.0";
inline constexpr const char* kLabVersion = "1.0.0";

struct ConvergenceReport {
    std::string experiment;
    std::string group_fingerprint;
    nlohmann::json params; // resolved config + versions + run metadata
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::string label_column;        // optional leading text column
    std::vector<std::string> labels; // one per row when label_column is set
    bool pass = false;
    std::string verdict_note;

    void add_row(std::initializer_list<double> vals) { rows.emplace_back(vals); }
    void add_row(std::string label, std::initializer_list<double> vals) {
        labels.push_back(std::move(label));
        rows.emplace_back(vals);
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["experiment"] = experiment;
        j["group_fingerprint"] = group_fingerprint;
        j["params"] = params;
        nlohmann::json jr = nlohmann::json::array();
        for (size_t k = 0; k < rows.size(); ++k) {
            nlohmann::json row;
            if (!label_column.empty() && k < labels.size()) row[label_column] = labels[k];
            for (size_t i = 0; i < columns.size() && i < rows[k].size(); ++i)
                row[columns[i]] = rows[k][i];
            jr.push_back(std::move(row));
        }
        j["rows"] = std::move(jr);
        j["verdict"] = nlohmann::json{{"pass", pass}, {"note", verdict_note}};
        return j;
    }

    void write_csv(std::ostream& os) const {
        bool lab_col = !label_column.empty();
        if (lab_col) os << label_column;
        for (size_t i = 0; i < columns.size(); ++i)
            os << (i || lab_col ? "," : "") << columns[i];
        os << '\n';
        for (size_t k = 0; k < rows.size(); ++k) {
            if (lab_col) os << (k < labels.size() ? labels[k] : "");
            for (size_t i = 0; i < rows[k].size(); ++i)
                os << (i || lab_col ? "," : "") << fmt17(rows[k][i]);
            os << '\n';
        }
    }

    void write_files(const std::filesystem::path& dir) const {
        std::ofstream js(dir / (experiment + ".json"));
        js << to_json().dump(2) << '\n';
        if (!js.good()) throw LabError("report: cannot write " + experiment + ".json");
        std::ofstream cs(dir / (experiment + ".csv"), std::ios::binary);
        write_csv(cs);
        if (!cs.good()) throw LabError("report: cannot write " + experiment + ".csv");
    }
};

// new timestamped directory under out_dir; reruns never overwrite earlier runs
inline std::filesystem::path make_run_dir(const std::string& out_dir,
                                          const std::string& stamp) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    fs::path base = fs::path(out_dir) / ("run-" + stamp);
    fs::path dir = base;
    for (int k = 1; fs::exists(dir); ++k)
        dir = fs::path(base.string() + "-" + std::to_string(k));
    fs::create_directories(dir);
    return dir;
}

inline std::string timestamp_now() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
#if defined(_WIN32)
    gmtime_s(&tm, &t);
#else
    gmtime_r(&t, &tm);
#endif
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
    return buf;
}

} // namespace lab
