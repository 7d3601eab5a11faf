#pragma once

namespace fletchsim {

enum class Status {
    Ok,
    NotFound,
    PermissionDenied,
    AlreadyExists,
    NotEmpty,
    NotADirectory,
    MalformedPath,
};

inline const char* status_name(Status s) {
    switch (s) {
        case Status::Ok: return "ok";
        case Status::NotFound: return "not_found";
        case Status::PermissionDenied: return "permission_denied";
        case Status::AlreadyExists: return "already_exists";
        case Status::NotEmpty: return "not_empty";
        case Status::NotADirectory: return "not_a_directory";
        case Status::MalformedPath: return "malformed_path";
    }
    return "unknown";
}

}  // namespace fletchsim
