// json io implemented later
