# Report builders package
