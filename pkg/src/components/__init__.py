# components package
