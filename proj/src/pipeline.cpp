// pipeline implemented later
