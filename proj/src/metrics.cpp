#include "fletchsim/metrics.hpp"

#include <algorithm>
#include <numeric>

namespace fletchsim {

LatencyStats summarize_latencies(std::vector<SimTime>& samples) {
    LatencyStats s;
    s.count = samples.size();
    if (samples.empty()) return s;
    std::sort(samples.begin(), samples.end());
    uint64_t sum = std::accumulate(samples.begin(), samples.end(), uint64_t{0});
    s.mean = static_cast<double>(sum) / static_cast<double>(samples.size());
    auto rank = [&](double q) {
        size_t i = static_cast<size_t>(q * static_cast<double>(samples.size()));
        if (i >= samples.size()) i = samples.size() - 1;
        return static_cast<double>(samples[i]);
    };
    s.p95 = rank(0.95);
    s.p99 = rank(0.99);
    return s;
}

void Metrics::write_csv_header(std::ostream& out) {
    out << "run,completed,throughput_ops,read_mean_us,read_p95_us,read_p99_us,"
           "write_mean_us,write_p95_us,write_p99_us,hit_rate,"
           "mean_recirc,recirc_path,recirc_lock,recirc_cross,"
           "hot_reports,admissions,admitted_paths,evicted_paths,"
           "dup_suppressed,server_retx,errors,starvation,violations\n";
}

void Metrics::write_csv(std::ostream& out, const std::string& run_label) {
    LatencyStats r = summarize_latencies(read_latencies);
    LatencyStats w = summarize_latencies(write_latencies);
    out << run_label << ',' << completed << ',' << throughput() << ','
        << r.mean / 1e3 << ',' << r.p95 / 1e3 << ',' << r.p99 / 1e3 << ','
        << w.mean / 1e3 << ',' << w.p95 / 1e3 << ',' << w.p99 / 1e3 << ','
        << hit_rate() << ',' << mean_recirculations() << ',' << recirc_path
        << ',' << recirc_lock << ',' << recirc_cross << ',' << hot_reports
        << ',' << admissions << ',' << admitted_paths << ',' << evicted_paths
        << ',' << dup_responses_suppressed << ',' << server_retransmissions
        << ',' << errors_returned << ',' << starvation_warnings << ','
        << total_violations() << '\n';
}

}  // namespace fletchsim
